#pragma once

// Central finite-difference gradient verification. The finite-difference
// oracle always runs in double so it measures the subject implementation
// (float or double graph) against an accurate reference derivative; the
// tolerance is what scales with the subject precision.

#include <functional>
#include <string>
#include <vector>

#include "popnet/ad.hpp"

namespace popnet {

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

namespace detail {

template <typename T, typename F>
ad::Tensor<T> to_tensor(const Grid<double>& x) {
    ad::Tensor<T> t(1, 1, x.h, x.w);
    for (size_t i = 0; i < x.v.size(); ++i) t.v[i] = static_cast<T>(x.v[i]);
    return t;
}

}  // namespace detail

// F: generic callable (ad::Graph<T>&, ad::Var<T>) -> scalar ad::Var<T>,
// usable with T = float and T = double.
template <typename T, typename F>
GradCheckResult gradcheck_scalar_fn(const std::string& name, F&& fn, const Gridd& x0,
                                    double step, double tol) {
    // Analytic gradient at the subject precision.
    std::vector<double> analytic(x0.size());
    {
        ad::Graph<T> g;
        ad::Tensor<T> t(1, 1, x0.h, x0.w);
        for (size_t i = 0; i < x0.v.size(); ++i) t.v[i] = static_cast<T>(x0.v[i]);
        auto leaf = g.leaf(std::move(t), true);
        auto loss = fn(g, leaf);
        if (loss.val().size() != 1) throw ValidationError("gradcheck: loss must be scalar");
        g.backward(loss.node());
        const auto& gr = leaf.grad();
        for (size_t i = 0; i < x0.v.size(); ++i)
            analytic[i] = gr.v.empty() ? 0.0 : static_cast<double>(gr.v[i]);
    }

    // Double-precision central differences.
    auto eval = [&](const Gridd& x) -> double {
        ad::Graph<double> g;
        ad::Tensor<double> t(1, 1, x.h, x.w);
        t.v = x.v;
        auto leaf = g.leaf(std::move(t), false);
        return fn(g, leaf).scalar();
    };
    double max_abs_fd = 0.0, max_abs_diff = 0.0;
    Gridd x = x0;
    for (size_t i = 0; i < x0.v.size(); ++i) {
        const double orig = x.v[i];
        x.v[i] = orig + step;
        const double fp = eval(x);
        x.v[i] = orig - step;
        const double fm = eval(x);
        x.v[i] = orig;
        const double fd = (fp - fm) / (2.0 * step);
        max_abs_fd = std::max(max_abs_fd, std::abs(fd));
        max_abs_diff = std::max(max_abs_diff, std::abs(fd - analytic[i]));
    }

    GradCheckResult res;
    res.name = name;
    res.tolerance = tol;
    res.max_rel_err = max_abs_diff / std::max(max_abs_fd, 1e-12);
    res.pass = res.max_rel_err < tol;
    return res;
}

}  // namespace popnet
