#ifndef SMORPH_HIERARCHY_HPP
#define SMORPH_HIERARCHY_HPP

#include <vector>

#include "smorph/image.hpp"

namespace smorph {

// Ordered concentric pseudo-mask layers plus their coarse foreground bound.
// layers[0] is the most confident (innermost) mask.
struct MaskHierarchy {
    std::vector<BinaryMask> layers;
    BinaryMask bound;

    int h() const { return int(layers.size()); }
    const BinaryMask& innermost() const { return layers.front(); }
    const BinaryMask& outermost() const { return layers.back(); }

    // strict concentric nesting: layers[0] ⊆ ... ⊆ layers[h-1] ⊆ bound,
    // with a nonempty innermost layer
    bool nested() const {
        if (layers.empty() || layers.front().empty()) return false;
        for (size_t i = 1; i < layers.size(); ++i)
            if (!layers[i - 1].is_subset_of(layers[i])) return false;
        return layers.back().is_subset_of(bound);
    }
};

}  // namespace smorph

#endif
