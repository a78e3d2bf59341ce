#ifndef SMORPH_CHECKPOINT_HPP
#define SMORPH_CHECKPOINT_HPP

#include <map>
#include <string>
#include <vector>

#include "smorph/net.hpp"

namespace smorph {

// Versioned binary container of named networks; each network stores its
// config and named parameter tensors with shape headers. Save/load round
// trips are bit-exact.
void save_networks(const std::string& path,
                   const std::vector<std::pair<std::string, const Network*>>& nets);

std::map<std::string, Network> load_networks(const std::string& path);

}  // namespace smorph

#endif
