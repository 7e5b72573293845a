#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hysure/errors.hpp"

namespace hysure {

/// Finite-support 2-D convolution kernel on an odd square window, centered
/// at ((support-1)/2, (support-1)/2). Weights are stored row-major.
class ConvolutionKernel {
public:
    ConvolutionKernel() = default;

    ConvolutionKernel(int support, std::vector<double> weights)
        : support_(support), weights_(std::move(weights)) {
        if (support < 1 || support % 2 == 0)
            throw ValidationError("ConvolutionKernel: support must be a positive odd integer, got " +
                                  std::to_string(support));
        if (weights_.size() != static_cast<std::size_t>(support) * support)
            throw ValidationError("ConvolutionKernel: expected " + std::to_string(support * support) +
                                  " weights, got " + std::to_string(weights_.size()));
        for (double w : weights_)
            if (!std::isfinite(w)) throw ValidationError("ConvolutionKernel: non-finite weight");
    }

    static ConvolutionKernel delta(int support = 1) {
        std::vector<double> w(static_cast<std::size_t>(support) * support, 0.0);
        w[(support / 2) * support + support / 2] = 1.0;
        return ConvolutionKernel(support, std::move(w));
    }

    int support() const { return support_; }
    int half() const { return (support_ - 1) / 2; }

    double operator()(int i, int j) const { return weights_[i * support_ + j]; }
    double& operator()(int i, int j) { return weights_[i * support_ + j]; }

    const std::vector<double>& weights() const { return weights_; }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

    /// Scale to unit DC gain (weight sum 1).
    ConvolutionKernel normalized() const {
        double s = weight_sum();
        if (!std::isfinite(s) || std::abs(s) < 1e-300)
            throw NumericalError("ConvolutionKernel: cannot normalize, weight sum is " + std::to_string(s));
        std::vector<double> w = weights_;
        for (double& v : w) v /= s;
        return ConvolutionKernel(support_, std::move(w));
    }

private:
    int support_ = 1;
    std::vector<double> weights_{1.0};
};

} // namespace hysure
