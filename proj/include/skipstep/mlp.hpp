#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skipstep/denoiser.hpp"
#include "skipstep/random.hpp"

namespace skipstep {

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;  // out x in, row-major
    std::vector<double> bias;    // out
};

/// Fully connected eps-predictor with SiLU hidden activations and a linear
/// output layer. The first layer sees [x, embed(t)], where embed(t) holds
/// sin(w_k t/T) and cos(w_k t/T) for w_k = 1000^(k/(h-1)), k = 0..h-1, h = embed_dim/2.
///
/// `widths` = {data_dim, hidden..., data_dim}.
class MlpDenoiser final : public Denoiser {
public:
    MlpDenoiser(std::vector<std::size_t> widths, int T, std::size_t embed_dim, RandomSource& rng);
    MlpDenoiser(std::vector<std::size_t> widths, int T, std::size_t embed_dim, std::vector<DenseLayer> layers);

    std::size_t dim() const override { return widths_.front(); }
    int timesteps() const override { return T_; }
    Batch predict_eps(const Batch& x, int t) const override;
    Batch predict_eps(const Batch& x, std::span<const int> t) const;

    /// Mean over rows of weight[r] * ||target_r - eps_theta(x_r, t_r)||^2.
    /// When `grad` is non-null it receives d(loss)/d(parameters) in the
    /// flat layout of `parameters()`.
    double loss(const Batch& x, std::span<const int> t, const Batch& target,
                std::span<const double> row_weight, std::vector<double>* grad = nullptr) const;

    std::vector<double> time_embedding(int t) const;

    std::size_t parameter_count() const;
    // Flat layout: for each layer, weight (row-major) then bias.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    const std::vector<std::size_t>& widths() const { return widths_; }
    std::size_t embed_dim() const { return embed_dim_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

private:
    void validate() const;
    Batch input_rows(const Batch& x, std::span<const int> t) const;

    std::vector<std::size_t> widths_;
    int T_;
    std::size_t embed_dim_;
    std::vector<DenseLayer> layers_;
};

}  // namespace skipstep
