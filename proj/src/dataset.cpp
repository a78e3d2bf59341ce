#include "smorph/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "smorph/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace smorph {

const LabeledCrop* Dataset::find(const std::string& id) const {
    for (const auto& c : crops)
        if (c.id == id) return &c;
    return nullptr;
}

SoftLabel derive_soft_label(const std::vector<int>& votes, float lambda) {
    if (votes.empty() || votes.size() > 3)
        throw DataError("soft label: need 1 to 3 votes");
    for (int v : votes)
        if (v < 0) throw DataError("soft label: negative class index");

    if (votes.size() == 1) return SoftLabel::consensus_of(votes[0], lambda);
    if (votes.size() == 2) {
        if (votes[0] == votes[1]) return SoftLabel::consensus_of(votes[0], lambda);
        throw DataError("soft label: 1-1 vote tie has no majority");
    }
    // three votes
    if (votes[0] == votes[1] && votes[1] == votes[2])
        return SoftLabel::consensus_of(votes[0], lambda);
    if (votes[0] == votes[1]) return SoftLabel::split(votes[0], votes[2], lambda);
    if (votes[0] == votes[2]) return SoftLabel::split(votes[0], votes[1], lambda);
    if (votes[1] == votes[2]) return SoftLabel::split(votes[1], votes[0], lambda);
    throw DataError("soft label: three-way disagreement");
}

std::vector<int> FoldSplit::train_indices(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) out.push_back(int(i));
    return out;
}

std::vector<int> FoldSplit::test_indices(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) out.push_back(int(i));
    return out;
}

FoldSplit make_folds(const Dataset& ds, int k, uint64_t seed) {
    if (k < 2) throw UsageError("make_folds: k must be >= 2");
    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < ds.crops.size(); ++i)
        by_class[ds.crops[i].soft.c1].push_back(int(i));
    for (const auto& [cls, members] : by_class)
        if (int(members.size()) < k)
            throw DataError("make_folds: class " + std::to_string(cls) +
                            " has fewer members than folds");

    FoldSplit split;
    split.k = k;
    split.seed = seed;
    split.assignment.assign(ds.crops.size(), 0);
    Rng rng(seed);
    for (auto& [cls, members] : by_class) {
        // seeded Fisher-Yates, then deal round-robin
        for (size_t i = members.size(); i > 1; --i) {
            size_t j = rng.uniform_index(i);
            std::swap(members[i - 1], members[j]);
        }
        for (size_t i = 0; i < members.size(); ++i)
            split.assignment[members[i]] = int(i % size_t(k));
    }
    return split;
}

namespace {

std::string crop_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "crop%04d", i);
    return buf;
}

json spec_to_json(const SyntheticSpec& s) {
    json j;
    j["class_id"] = s.class_id;
    j["height"] = s.height;
    j["width"] = s.width;
    j["channels"] = s.channels;
    j["head"] = {{"semi_a", s.head.semi_a},       {"semi_b", s.head.semi_b},
                 {"taper", s.head.taper},         {"acro_fraction", s.head.acro_fraction},
                 {"intensity", s.head.intensity}, {"acro_delta", s.head.acro_delta},
                 {"bump_amp", s.head.bump_amp},   {"bump_cycles", s.head.bump_cycles},
                 {"bump_phase", s.head.bump_phase}};
    j["mid"] = {{"length", s.mid.length}, {"width", s.mid.width}, {"intensity", s.mid.intensity}};
    j["tail"] = {{"length", s.tail.length},
                 {"amplitude", s.tail.amplitude},
                 {"period", s.tail.period},
                 {"width", s.tail.width},
                 {"intensity", s.tail.intensity}};
    j["pose_deg"] = s.pose_deg;
    j["noise_sigma"] = s.noise_sigma;
    j["bg"] = {{"base", s.bg.base},
               {"texture_amp", s.bg.texture_amp},
               {"fx", s.bg.fx},
               {"fy", s.bg.fy},
               {"phase", s.bg.phase}};
    j["seed"] = s.seed;
    return j;
}

}  // namespace

void generate_corpus(const std::string& dir, const CorpusSpec& spec) {
    if (spec.n <= 0) throw UsageError("generate_corpus: n must be positive");
    if (spec.num_classes < 2 || spec.num_classes > 5)
        throw UsageError("generate_corpus: num_classes must be in 2..5");
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "truth");

    Rng rng(spec.seed);
    std::ofstream votes(fs::path(dir) / "votes.csv");
    std::ofstream manifest(fs::path(dir) / "manifest.jsonl");
    if (!votes || !manifest) throw DataError("generate_corpus: cannot write to " + dir);

    for (int i = 0; i < spec.n; ++i) {
        int cls = i % spec.num_classes;  // balanced round-robin class mix
        // four-class corpora use the well-separated morphology quartet
        // (normal, tapered, pyriform, small); amorphous joins at five classes
        int kind = (spec.num_classes == 4 && cls == 3) ? 4 : cls;
        SyntheticSpec s = random_spec(kind, spec.height, spec.width, spec.channels,
                                      spec.noise_sigma, rng);
        auto [img, truth] = generate_crop(s);
        std::string id = crop_id(i);
        write_png((fs::path(dir) / "images" / (id + ".png")).string(), img);
        write_mask_png((fs::path(dir) / "truth" / (id + "_head.png")).string(), truth.head);
        write_mask_png((fs::path(dir) / "truth" / (id + "_mid.png")).string(), truth.midpiece);
        write_mask_png((fs::path(dir) / "truth" / (id + "_tail.png")).string(), truth.tail);

        int v3 = cls;
        if (spec.dissent_rate > 0.0 && rng.bernoulli(spec.dissent_rate)) {
            v3 = int(rng.uniform_index(uint64_t(spec.num_classes - 1)));
            if (v3 >= cls) ++v3;
        }
        votes << id << "," << cls << "," << cls << "," << v3 << "\n";

        json j = spec_to_json(s);
        j["id"] = id;
        manifest << j.dump() << "\n";
    }
}

Dataset load_dataset(const std::string& dir, float lambda) {
    fs::path root(dir);
    fs::path votes_path = root / "votes.csv";
    std::ifstream votes(votes_path);
    if (!votes) throw DataError("load_dataset: missing " + votes_path.string());

    Dataset ds;
    ds.root = dir;
    std::string line;
    int line_no = 0;
    while (std::getline(votes, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string token;
        std::vector<std::string> fields;
        while (std::getline(ss, token, ',')) fields.push_back(token);
        if (fields.size() < 2 || fields.size() > 4)
            throw DataError("votes.csv line " + std::to_string(line_no) +
                            ": expected crop_id,vote1[,vote2[,vote3]]");
        LabeledCrop crop;
        crop.id = fields[0];
        for (size_t f = 1; f < fields.size(); ++f) {
            try {
                size_t used = 0;
                int v = std::stoi(fields[f], &used);
                if (used != fields[f].size() || v < 0) throw std::invalid_argument("");
                crop.votes.push_back(v);
            } catch (const std::exception&) {
                throw DataError("votes.csv line " + std::to_string(line_no) + " (" +
                                crop.id + "): malformed vote '" + fields[f] + "'");
            }
        }
        try {
            crop.soft = derive_soft_label(crop.votes, lambda);
        } catch (const DataError&) {
            ds.excluded.push_back(crop.id);
            continue;
        }
        crop.image_path = (root / "images" / (crop.id + ".png")).string();
        if (!fs::exists(crop.image_path))
            throw DataError("load_dataset: missing image for record " + crop.id);
        ds.crops.push_back(std::move(crop));
    }
    if (ds.crops.empty()) throw DataError("load_dataset: no usable crops in " + dir);

    // validate dimensions and derive the class count
    for (const auto& crop : ds.crops) {
        ImageCrop img = read_png(crop.image_path);
        if (ds.height == 0) {
            ds.height = img.height;
            ds.width = img.width;
            ds.channels = img.channels;
        } else if (img.height != ds.height || img.width != ds.width ||
                   img.channels != ds.channels) {
            throw DataError("load_dataset: inconsistent dimensions at record " + crop.id);
        }
        for (int v : crop.votes) ds.num_classes = std::max(ds.num_classes, v + 1);
    }
    return ds;
}

CropTruth load_truth(const std::string& dir, const std::string& id) {
    fs::path root(dir);
    CropTruth t;
    t.head = read_mask_png((root / "truth" / (id + "_head.png")).string());
    t.midpiece = read_mask_png((root / "truth" / (id + "_mid.png")).string());
    t.tail = read_mask_png((root / "truth" / (id + "_tail.png")).string());
    return t;
}

bool has_truth(const std::string& dir, const std::string& id) {
    return fs::exists(fs::path(dir) / "truth" / (id + "_head.png"));
}

}  // namespace smorph
