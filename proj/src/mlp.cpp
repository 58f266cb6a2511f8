#include "skipstep/mlp.hpp"

#include <cmath>
#include <string>

#include "skipstep/errors.hpp"

namespace skipstep {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double silu(double z) { return z * sigmoid(z); }

double silu_derivative(double z) {
    const double s = sigmoid(z);
    return s * (1.0 + z * (1.0 - s));
}

// out(r, o) = bias[o] + sum_i weight[o, i] * in(r, i)
Batch affine(const DenseLayer& layer, const Batch& in) {
    Batch out(in.rows(), layer.out);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        const auto x = in.row(r);
        auto y = out.row(r);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.weight.data() + o * layer.in;
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
    }
    return out;
}

}  // namespace

MlpDenoiser::MlpDenoiser(std::vector<std::size_t> widths, int T, std::size_t embed_dim, RandomSource& rng)
    : widths_(std::move(widths)), T_(T), embed_dim_(embed_dim) {
    if (widths_.size() < 2) throw ConfigError("mlp: need at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        DenseLayer layer;
        layer.in = widths_[l] + (l == 0 ? embed_dim_ : 0);
        layer.out = widths_[l + 1];
        layer.weight.resize(layer.in * layer.out);
        layer.bias.assign(layer.out, 0.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double& w : layer.weight) w = scale * rng.normal();
        layers_.push_back(std::move(layer));
    }
    validate();
}

MlpDenoiser::MlpDenoiser(std::vector<std::size_t> widths, int T, std::size_t embed_dim,
                         std::vector<DenseLayer> layers)
    : widths_(std::move(widths)), T_(T), embed_dim_(embed_dim), layers_(std::move(layers)) {
    validate();
}

void MlpDenoiser::validate() const {
    if (T_ < 1) throw ConfigError("mlp: T must be >= 1");
    if (embed_dim_ % 2 != 0) throw ConfigError("mlp: embed_dim must be even");
    if (widths_.size() < 2 || widths_.front() != widths_.back())
        throw ConfigError("mlp: widths must start and end with the data dimension");
    for (std::size_t w : widths_)
        if (w == 0) throw ConfigError("mlp: layer widths must be positive");
    if (layers_.size() + 1 != widths_.size()) throw ConfigError("mlp: layer count does not match widths");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        const std::size_t expect_in = widths_[l] + (l == 0 ? embed_dim_ : 0);
        if (layer.in != expect_in || layer.out != widths_[l + 1] || layer.weight.size() != layer.in * layer.out ||
            layer.bias.size() != layer.out)
            throw ConfigError("mlp: layer " + std::to_string(l) + " has inconsistent shape");
    }
}

std::vector<double> MlpDenoiser::time_embedding(int t) const {
    std::vector<double> emb(embed_dim_);
    const std::size_t half = embed_dim_ / 2;
    const double tau = static_cast<double>(t) / T_;
    for (std::size_t k = 0; k < half; ++k) {
        const double freq = half == 1 ? 1.0 : std::pow(1000.0, static_cast<double>(k) / (half - 1));
        emb[k] = std::sin(freq * tau);
        emb[half + k] = std::cos(freq * tau);
    }
    return emb;
}

Batch MlpDenoiser::input_rows(const Batch& x, std::span<const int> t) const {
    if (x.cols() != dim()) throw ConfigError("mlp: input dimension mismatch");
    if (t.size() != x.rows()) throw ConfigError("mlp: one timestep per row required");
    Batch in(x.rows(), dim() + embed_dim_);
    int cached_t = -1;
    std::vector<double> emb;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (t[r] < 1 || t[r] > T_) throw IndexError("mlp: timestep " + std::to_string(t[r]) + " out of range");
        if (t[r] != cached_t) {
            emb = time_embedding(t[r]);
            cached_t = t[r];
        }
        auto row = in.row(r);
        for (std::size_t j = 0; j < dim(); ++j) row[j] = x(r, j);
        for (std::size_t k = 0; k < embed_dim_; ++k) row[dim() + k] = emb[k];
    }
    return in;
}

Batch MlpDenoiser::predict_eps(const Batch& x, int t) const {
    const std::vector<int> ts(x.rows(), t);
    return predict_eps(x, ts);
}

Batch MlpDenoiser::predict_eps(const Batch& x, std::span<const int> t) const {
    Batch h = input_rows(x, t);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = affine(layers_[l], h);
        if (l + 1 < layers_.size())
            for (double& v : h.values()) v = silu(v);
    }
    return h;
}

double MlpDenoiser::loss(const Batch& x, std::span<const int> t, const Batch& target,
                         std::span<const double> row_weight, std::vector<double>* grad) const {
    const std::size_t n = x.rows();
    if (target.rows() != n || target.cols() != dim() || row_weight.size() != n)
        throw ConfigError("mlp loss: shape mismatch");
    if (n == 0) throw ConfigError("mlp loss: empty batch");

    // Forward pass, keeping layer inputs and pre-activations.
    std::vector<Batch> inputs;
    std::vector<Batch> pre;
    inputs.push_back(input_rows(x, t));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        pre.push_back(affine(layers_[l], inputs.back()));
        if (l + 1 < layers_.size()) {
            Batch act = pre.back();
            for (double& v : act.values()) v = silu(v);
            inputs.push_back(std::move(act));
        }
    }
    const Batch& out = pre.back();

    double total = 0.0;
    Batch delta(n, dim());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        double sq = 0.0;
        for (std::size_t j = 0; j < dim(); ++j) {
            const double diff = out(r, j) - target(r, j);
            sq += diff * diff;
            delta(r, j) = 2.0 * row_weight[r] * diff * inv_n;
        }
        total += row_weight[r] * sq;
    }
    const double value = total * inv_n;
    if (grad == nullptr) return value;

    grad->assign(parameter_count(), 0.0);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& layer : layers_) {
        offsets.push_back(off);
        off += layer.weight.size() + layer.bias.size();
    }
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const DenseLayer& layer = layers_[l];
        const Batch& in = inputs[l];
        double* gw = grad->data() + offsets[l];
        double* gb = gw + layer.weight.size();
        for (std::size_t r = 0; r < n; ++r) {
            const auto d = delta.row(r);
            const auto a = in.row(r);
            for (std::size_t o = 0; o < layer.out; ++o) {
                gb[o] += d[o];
                double* gwo = gw + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) gwo[i] += d[o] * a[i];
            }
        }
        if (l == 0) break;
        Batch next(n, layer.in);
        const Batch& z = pre[l - 1];
        for (std::size_t r = 0; r < n; ++r) {
            const auto d = delta.row(r);
            auto nd = next.row(r);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.weight.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) nd[i] += w[i] * d[o];
            }
            for (std::size_t i = 0; i < layer.in; ++i) nd[i] *= silu_derivative(z(r, i));
        }
        delta = std::move(next);
    }
    return value;
}

std::size_t MlpDenoiser::parameter_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers_) count += layer.weight.size() + layer.bias.size();
    return count;
}

std::vector<double> MlpDenoiser::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& layer : layers_) {
        flat.insert(flat.end(), layer.weight.begin(), layer.weight.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void MlpDenoiser::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ConfigError("mlp: parameter vector has wrong length");
    std::size_t pos = 0;
    for (auto& layer : layers_) {
        for (double& w : layer.weight) w = flat[pos++];
        for (double& b : layer.bias) b = flat[pos++];
    }
}

}  // namespace skipstep
