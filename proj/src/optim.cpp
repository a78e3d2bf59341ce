#include "smorph/optim.hpp"

#include <cmath>

namespace smorph {

void Adam::update_range(float* w, const float* g, size_t off, size_t n, double lr) {
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, double(t_));
    const double bc2 = 1.0 - std::pow(b2, double(t_));
    for (size_t i = 0; i < n; ++i) {
        double gi = g[off + i];
        double m = b1 * double(m_[off + i]) + (1.0 - b1) * gi;
        double v = b2 * double(v_[off + i]) + (1.0 - b2) * gi * gi;
        m_[off + i] = float(m);
        v_[off + i] = float(v);
        double mhat = m / bc1;
        double vhat = v / bc2;
        w[i] = float(double(w[i]) - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
}

void Adam::step(Network& net, const std::vector<float>& grad, double lr) {
    if (grad.size() != net.param_count() || m_.size() != net.param_count())
        throw std::invalid_argument("Adam::step: size mismatch");
    ++t_;
    auto& params = net.params();
    for (size_t pi = 0; pi < params.size(); ++pi)
        update_range(params[pi].w.data(), grad.data(), net.param_offset(pi),
                     params[pi].size(), lr);
}

void Adam::step_raw(std::vector<float>& w, const std::vector<float>& grad, double lr) {
    if (grad.size() != w.size() || m_.size() != w.size())
        throw std::invalid_argument("Adam::step_raw: size mismatch");
    ++t_;
    update_range(w.data(), grad.data(), 0, w.size(), lr);
}

}  // namespace smorph
