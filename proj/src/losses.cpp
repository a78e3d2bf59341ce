#include "smorph/losses.hpp"

#include <algorithm>
#include <cmath>

namespace smorph {

void ProbMap::clamp() {
    for (float& p : v) p = std::clamp(p, kProbEps, 1.0f - kProbEps);
}

SegLossResult seg_partial_ce(const ProbMap& pred, const MaskHierarchy& hier) {
    if (hier.layers.empty()) throw std::invalid_argument("seg_partial_ce: empty hierarchy");
    const BinaryMask& fg = hier.innermost();
    const BinaryMask& top = hier.outermost();
    if (fg.height != pred.height || fg.width != pred.width)
        throw std::invalid_argument("seg_partial_ce: shape mismatch");

    SegLossResult res;
    res.grad = FloatPlane(pred.height, pred.width, 0.0f);
    const size_t n = pred.v.size();
    const double inv_n = 1.0 / double(n);
    double acc = 0.0;
    size_t confident = 0;
    for (size_t i = 0; i < n; ++i) {
        double p = std::clamp(pred.v[i], kProbEps, 1.0f - kProbEps);
        if (fg.bits[i]) {
            acc += std::log(p);
            res.grad.v[i] = float(-inv_n / p);
            ++confident;
        } else if (!top.bits[i]) {
            acc += std::log(1.0 - p);
            res.grad.v[i] = float(inv_n / (1.0 - p));
            ++confident;
        }
        // pixels in outer layers but not the innermost are ignored
    }
    if (confident == 0) {
        res.empty_confident_set = true;
        res.grad = FloatPlane(pred.height, pred.width, 0.0f);
        res.loss = 0.0;
        return res;
    }
    res.loss = -acc * inv_n;
    return res;
}

ConsistencyResult consistency(const ProbMap& student, const ProbMap& teacher,
                              const AugmentationRecord& rec_student,
                              const AugmentationRecord& rec_teacher) {
    if (student.height != teacher.height || student.width != teacher.width)
        throw std::invalid_argument("consistency: shape mismatch");

    InvertedMapD s = invert_geometric_double(student.plane(), rec_student);
    InvertedMapD t = invert_geometric_double(teacher.plane(), rec_teacher);
    BinaryMask valid = mask_and(s.valid, t.valid);

    ConsistencyResult res;
    res.grad_student = FloatPlane(student.height, student.width, 0.0f);
    const size_t n_valid = valid.count();
    if (n_valid == 0) {
        res.empty_valid_region = true;
        return res;
    }
    double acc = 0.0;
    FloatPlane diff(student.height, student.width, 0.0f);
    for (size_t i = 0; i < valid.bits.size(); ++i) {
        if (!valid.bits[i]) continue;
        double d = s.v[i] - t.v[i];
        acc += d * d;
        diff.v[i] = float(2.0 * d / double(n_valid));
    }
    res.loss = acc / double(n_valid);
    invert_geometric_backward(diff, valid, rec_student, res.grad_student);
    return res;
}

std::vector<float> softmax(const std::vector<float>& logits) {
    float mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    std::vector<double> e(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(double(logits[i]) - double(mx));
        denom += e[i];
    }
    std::vector<float> out(logits.size());
    for (size_t i = 0; i < logits.size(); ++i)
        out[i] = std::clamp(float(e[i] / denom), kProbEps, 1.0f - kProbEps);
    return out;
}

VectorLossResult rotation_ce(const std::array<float, 4>& logits, int target) {
    if (target < 0 || target > 3)
        throw std::invalid_argument("rotation_ce: target out of range");
    std::vector<float> l(logits.begin(), logits.end());
    float mx = *std::max_element(l.begin(), l.end());
    double denom = 0.0;
    std::array<double, 4> e{};
    for (int i = 0; i < 4; ++i) {
        e[i] = std::exp(double(l[i]) - double(mx));
        denom += e[i];
    }
    VectorLossResult res;
    res.loss = std::log(denom) - (double(l[target]) - double(mx));
    res.grad.resize(4);
    for (int i = 0; i < 4; ++i)
        res.grad[i] = float(e[i] / denom - (i == target ? 1.0 : 0.0));
    return res;
}

VectorLossResult soft_ce(const std::vector<float>& probs, const SoftLabel& label) {
    const int k = int(probs.size());
    if (label.c1 < 0 || label.c1 >= k || label.c2 < 0 || label.c2 >= k)
        throw std::invalid_argument("soft_ce: class index out of range");
    if (!label.consensus && label.c1 == label.c2)
        throw std::invalid_argument("soft_ce: inconsistent label (c1 == c2 without consensus)");
    if (label.consensus && label.c1 != label.c2)
        throw std::invalid_argument("soft_ce: inconsistent label (consensus with c1 != c2)");
    if (label.lambda < 0.0f || label.lambda > 1.0f)
        throw std::invalid_argument("soft_ce: lambda outside [0,1]");

    VectorLossResult res;
    res.grad.assign(probs.size(), 0.0f);
    double p1 = std::clamp(probs[label.c1], kProbEps, 1.0f - kProbEps);
    if (label.consensus) {
        // reduces to vanilla cross-entropy
        res.loss = -std::log(p1);
        res.grad[label.c1] = float(-1.0 / p1);
        return res;
    }
    double p2 = std::clamp(probs[label.c2], kProbEps, 1.0f - kProbEps);
    double lam = double(label.lambda);
    res.loss = -(lam * std::log(p1) + (1.0 - lam) * std::log(p2));
    res.grad[label.c1] = float(-lam / p1);
    res.grad[label.c2] = float(-(1.0 - lam) / p2);
    return res;
}

double fine_total(double seg, double con, const LossWeights& w) {
    if (w.alpha < 0.0f || w.beta < 0.0f)
        throw std::invalid_argument("fine_total: weights must be nonnegative");
    if (w.alpha == 0.0f && w.beta == 0.0f)
        throw std::invalid_argument("fine_total: weights cannot both be zero");
    return double(w.alpha) * seg + double(w.beta) * con;
}

}  // namespace smorph
