#ifndef SMORPH_OPTIM_HPP
#define SMORPH_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "smorph/net.hpp"

namespace smorph {

// Multiplies the base learning rate by `factor` from each milestone epoch
// onward (epochs are 0-based).
struct StepDecaySchedule {
    std::vector<int> milestones;
    double factor = 0.1;

    double lr_at(double base_lr, int epoch) const {
        double lr = base_lr;
        for (int m : milestones)
            if (epoch >= m) lr *= factor;
        return lr;
    }
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0f), v_(n, 0.0f) {}

    const AdamConfig& config() const { return cfg_; }
    int64_t step_count() const { return t_; }

    // one update over the network's flat parameter layout
    void step(Network& net, const std::vector<float>& grad, double lr);

    // raw variant for vectors outside a Network
    void step_raw(std::vector<float>& w, const std::vector<float>& grad, double lr);

private:
    void update_range(float* w, const float* g, size_t off, size_t n, double lr);

    AdamConfig cfg_;
    std::vector<float> m_, v_;
    int64_t t_ = 0;
};

}  // namespace smorph

#endif
