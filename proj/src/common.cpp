#include "smorph/common.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <sstream>

namespace smorph {

namespace {

const std::map<std::string, uint32_t>& flag_names() {
    static const std::map<std::string, uint32_t> names = {
        {"degenerate_threshold", kFlagDegenerateThreshold},
        {"tiny_nucleus", kFlagTinyNucleus},
        {"ambiguous_orientation", kFlagAmbiguousOrientation},
        {"empty_acrosome", kFlagEmptyAcrosome},
        {"clipped_hierarchy", kFlagClippedHierarchy},
        {"empty_confident_set", kFlagEmptyConfidentSet},
        {"empty_valid_region", kFlagEmptyValidRegion},
        {"empty_teacher_mask", kFlagEmptyTeacherMask},
        {"reduced_clusters", kFlagReducedClusters},
    };
    return names;
}

}  // namespace

std::string flags_to_string(uint32_t flags) {
    std::string out;
    for (const auto& [name, bit] : flag_names()) {
        if (flags & bit) {
            if (!out.empty()) out += "|";
            out += name;
        }
    }
    return out;
}

uint32_t flags_from_string(const std::string& text) {
    uint32_t flags = 0;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, '|')) {
        if (token.empty()) continue;
        auto it = flag_names().find(token);
        if (it == flag_names().end()) throw DataError("unknown quality flag: " + token);
        flags |= it->second;
    }
    return flags;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    int workers = std::min(threads, n);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n || failed.load()) break;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) error_msg = e.what();
                    break;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) throw NumericError("parallel task failed: " + error_msg);
}

int default_thread_count() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc) : 1;
}

}  // namespace smorph
