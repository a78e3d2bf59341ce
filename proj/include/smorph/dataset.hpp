#ifndef SMORPH_DATASET_HPP
#define SMORPH_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "smorph/losses.hpp"
#include "smorph/synth.hpp"

namespace smorph {

struct LabeledCrop {
    std::string id;
    std::string image_path;
    std::vector<int> votes;  // 1 to 3 expert votes
    SoftLabel soft;
};

struct Dataset {
    std::string root;
    std::vector<LabeledCrop> crops;
    std::vector<std::string> excluded;  // ids rejected by the agreement filter
    int num_classes = 0;
    int height = 0, width = 0, channels = 0;

    const LabeledCrop* find(const std::string& id) const;
};

// c1 = modal class, c2 = the dissenting vote when exactly one expert
// disagrees. Three-way disagreement (or a 1-1 tie) has no majority and is
// rejected by the partial-agreement filter.
SoftLabel derive_soft_label(const std::vector<int>& votes, float lambda = 0.85f);

struct FoldSplit {
    int k = 5;
    std::vector<int> assignment;  // crop index -> fold
    uint64_t seed = 0;

    std::vector<int> train_indices(int fold) const;
    std::vector<int> test_indices(int fold) const;
};

// Stratified assignment: per-class counts differ by at most one across folds.
FoldSplit make_folds(const Dataset& ds, int k, uint64_t seed);

struct CorpusSpec {
    int n = 200;
    int num_classes = 4;
    int height = 35, width = 35, channels = 1;
    float noise_sigma = 0.05f;
    double dissent_rate = 0.0;  // fraction of crops with one dissenting vote
    float lambda = 0.85f;
    uint64_t seed = 1;
};

// Writes images/*.png, votes.csv, truth/*.png and manifest.jsonl.
void generate_corpus(const std::string& dir, const CorpusSpec& spec);

// Reads votes.csv and validates that every referenced image exists with
// consistent dimensions. Malformed records raise DataError naming the record.
Dataset load_dataset(const std::string& dir, float lambda = 0.85f);

// Ground-truth masks for a generated crop (throws if absent).
CropTruth load_truth(const std::string& dir, const std::string& id);
bool has_truth(const std::string& dir, const std::string& id);

}  // namespace smorph

#endif
