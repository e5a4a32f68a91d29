#include "fxlab/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fxlab {

std::string shape_string(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

void require_cached(bool cached, const char* layer) {
    if (!cached) throw Error(ErrorKind::State, std::string(layer) + ": backward called before forward");
}

// One (sample, channel) plane of an [N,C,...] buffer.
template <typename T>
Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> plane(T* base, std::size_t index, std::size_t spatial) {
    return {base + index * spatial, Eigen::Index(spatial)};
}

template <typename T>
Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> plane(const T* base, std::size_t index, std::size_t spatial) {
    return {base + index * spatial, Eigen::Index(spatial)};
}

template <typename T>
void ensure_grad(BasicTensor<T>& t) {
    if (!t.has_grad()) t.zero_grad();
}

template <typename T>
void kaiming_uniform(BasicTensor<T>& w, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / double(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : w.values()) v = static_cast<T>(dist(rng));
}

template <typename T>
void im2col(const T* x, std::size_t c, std::size_t h, std::size_t w, std::size_t k, T* col) {
    const std::size_t ho = h - k + 1, wo = w - k + 1, p = ho * wo;
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
                T* row = col + ((ch * k + ky) * k + kx) * p;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const T* src = x + (ch * h + oy + ky) * w + kx;
                    std::copy_n(src, wo, row + oy * wo);
                }
            }
}

template <typename T>
void col2im_add(const T* col, std::size_t c, std::size_t h, std::size_t w, std::size_t k, T* x) {
    const std::size_t ho = h - k + 1, wo = w - k + 1, p = ho * wo;
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
                const T* row = col + ((ch * k + ky) * k + kx) * p;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    T* dst = x + (ch * h + oy + ky) * w + kx;
                    const T* src = row + oy * wo;
                    for (std::size_t ox = 0; ox < wo; ++ox) dst[ox] += src[ox];
                }
            }
}

}  // namespace

// ---- Conv2d ----------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : weight({out_channels, in_channels * kernel * kernel}),
      bias({out_channels}),
      in_(in_channels),
      out_(out_channels),
      k_(kernel) {}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
    if (in.size() != 4 || in[1] != in_)
        throw Error(ErrorKind::Shape, "conv2d expects [N," + std::to_string(in_) + ",H,W], got " + shape_string(in));
    if (in[2] < k_ || in[3] < k_)
        throw Error(ErrorKind::Shape, "conv2d input " + shape_string(in) + " smaller than the kernel");
    return {in[0], out_, in[2] - k_ + 1, in[3] - k_ + 1};
}

template <typename T>
BasicTensor<T> Conv2d<T>::forward(const BasicTensor<T>& x) {
    const Shape os = output_shape(x.shape());
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t p = os[2] * os[3], ckk = in_ * k_ * k_;
    BasicTensor<T> y(os);
    typename BasicTensor<T>::Storage col(ckk * p);
    ConstMatrixMap<T> wm(weight.data(), out_, ckk);
    for (std::size_t b = 0; b < n; ++b) {
        im2col(x.data() + b * in_ * h * w, in_, h, w, k_, col.data());
        MatrixMap<T> ym(y.data() + b * out_ * p, out_, p);
        ym.noalias() = wm * ConstMatrixMap<T>(col.data(), ckk, p);
        for (std::size_t o = 0; o < out_; ++o) ym.row(o).array() += bias[o];
    }
    input_ = x;
    cached_ = true;
    return y;
}

template <typename T>
BasicTensor<T> Conv2d<T>::backward(const BasicTensor<T>& grad_out, bool need_input_grad) {
    require_cached(cached_, "conv2d");
    const Shape os = output_shape(input_.shape());
    if (grad_out.shape() != os) throw Error(ErrorKind::Shape, "conv2d: gradient shape mismatch");
    ensure_grad(weight);
    ensure_grad(bias);
    const std::size_t n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
    const std::size_t p = os[2] * os[3], ckk = in_ * k_ * k_;
    typename BasicTensor<T>::Storage col(ckk * p), dcol;
    if (need_input_grad) dcol.resize(ckk * p);
    BasicTensor<T> dx;
    if (need_input_grad) dx = BasicTensor<T>(input_.shape());

    MatrixMap<T> dw(weight.grad().data(), out_, ckk);
    ConstMatrixMap<T> wm(weight.data(), out_, ckk);
    for (std::size_t b = 0; b < n; ++b) {
        im2col(input_.data() + b * in_ * h * w, in_, h, w, k_, col.data());
        ConstMatrixMap<T> dy(grad_out.data() + b * out_ * p, out_, p);
        dw.noalias() += dy * ConstMatrixMap<T>(col.data(), ckk, p).transpose();
        for (std::size_t o = 0; o < out_; ++o) bias.grad()[o] += dy.row(o).sum();
        if (need_input_grad) {
            MatrixMap<T>(dcol.data(), ckk, p).noalias() = wm.transpose() * dy;
            col2im_add(dcol.data(), in_, h, w, k_, dx.data() + b * in_ * h * w);
        }
    }
    return dx;
}

template <typename T>
void Conv2d<T>::init(std::mt19937_64& rng) {
    kaiming_uniform(weight, in_ * k_ * k_, rng);
    std::fill(bias.values().begin(), bias.values().end(), T(0));
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

// ---- Dense -----------------------------------------------------------------

template <typename T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : weight({out_features, in_features}), bias({out_features}), in_(in_features), out_(out_features) {}

template <typename T>
BasicTensor<T> Dense<T>::forward(const BasicTensor<T>& x) {
    if (x.rank() != 2 || x.dim(1) != in_)
        throw Error(ErrorKind::Shape, "dense expects [N," + std::to_string(in_) + "], got " + shape_string(x.shape()));
    const std::size_t n = x.dim(0);
    BasicTensor<T> y({n, out_});
    MatrixMap<T> ym(y.data(), n, out_);
    ym.noalias() = ConstMatrixMap<T>(x.data(), n, in_) * ConstMatrixMap<T>(weight.data(), out_, in_).transpose();
    ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), out_);
    input_ = x;
    cached_ = true;
    return y;
}

template <typename T>
BasicTensor<T> Dense<T>::backward(const BasicTensor<T>& grad_out, bool need_input_grad) {
    require_cached(cached_, "dense");
    const std::size_t n = input_.dim(0);
    if (grad_out.shape() != Shape{n, out_}) throw Error(ErrorKind::Shape, "dense: gradient shape mismatch");
    ensure_grad(weight);
    ensure_grad(bias);
    ConstMatrixMap<T> dy(grad_out.data(), n, out_);
    MatrixMap<T>(weight.grad().data(), out_, in_).noalias() += dy.transpose() * ConstMatrixMap<T>(input_.data(), n, in_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.grad().data(), out_) += dy.colwise().sum();
    if (!need_input_grad) return {};
    BasicTensor<T> dx({n, in_});
    MatrixMap<T>(dx.data(), n, in_).noalias() = dy * ConstMatrixMap<T>(weight.data(), out_, in_);
    return dx;
}

template <typename T>
void Dense<T>::init(std::mt19937_64& rng) {
    kaiming_uniform(weight, in_, rng);
    std::fill(bias.values().begin(), bias.values().end(), T(0));
}

template <typename T>
void Dense<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

// ---- BatchNorm -------------------------------------------------------------

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double eps, double momentum)
    : gamma({channels}, T(1)),
      beta({channels}, T(0)),
      running_mean({channels}, T(0)),
      running_var({channels}, T(1)),
      channels_(channels),
      eps_(eps),
      momentum_(momentum) {}

template <typename T>
BasicTensor<T> BatchNorm<T>::forward(const BasicTensor<T>& x, bool training) {
    if ((x.rank() != 2 && x.rank() != 4) || x.dim(1) != channels_)
        throw Error(ErrorKind::Shape, "batchnorm expects [N," + std::to_string(channels_) + ",...], got " +
                                          shape_string(x.shape()));
    const std::size_t n = x.dim(0);
    const std::size_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    const std::size_t count = n * spatial;
    if (training && count == 0) throw Error(ErrorKind::EmptyInput, "batchnorm: empty batch in training mode");

    BasicTensor<T> y(x.shape());
    normalized_ = BasicTensor<T>(x.shape());
    inv_std_.assign(channels_, 0.0);
    for (std::size_t c = 0; c < channels_; ++c) {
        double mean, var;
        if (training) {
            double sum = 0.0;
            for (std::size_t b = 0; b < n; ++b) sum += double(plane(x.data(), b * channels_ + c, spatial).sum());
            mean = sum / double(count);
            double sq = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                sq += double((plane(x.data(), b * channels_ + c, spatial) - static_cast<T>(mean)).square().sum());
            var = sq / double(count);
            const double unbiased = count > 1 ? var * double(count) / double(count - 1) : var;
            running_mean[c] = static_cast<T>((1.0 - momentum_) * running_mean[c] + momentum_ * mean);
            running_var[c] = static_cast<T>((1.0 - momentum_) * running_var[c] + momentum_ * unbiased);
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv;
        const T m = static_cast<T>(mean), iv = static_cast<T>(inv), g = gamma[c], bt = beta[c];
        for (std::size_t b = 0; b < n; ++b) {
            auto xh = plane(normalized_.data(), b * channels_ + c, spatial);
            xh = (plane(x.data(), b * channels_ + c, spatial) - m) * iv;
            plane(y.data(), b * channels_ + c, spatial) = xh * g + bt;
        }
    }
    training_cached_ = training;
    cached_ = true;
    return y;
}

template <typename T>
BasicTensor<T> BatchNorm<T>::backward(const BasicTensor<T>& grad_out) {
    require_cached(cached_, "batchnorm");
    if (grad_out.shape() != normalized_.shape()) throw Error(ErrorKind::Shape, "batchnorm: gradient shape mismatch");
    ensure_grad(gamma);
    ensure_grad(beta);
    const auto& shape = normalized_.shape();
    const std::size_t n = shape[0];
    const std::size_t spatial = shape.size() == 4 ? shape[2] * shape[3] : 1;
    const double count = double(n * spatial);
    BasicTensor<T> dx(shape);
    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const auto dy = plane(grad_out.data(), b * channels_ + c, spatial);
            sum_dy += double(dy.sum());
            sum_dy_xh += double((dy * plane(normalized_.data(), b * channels_ + c, spatial)).sum());
        }
        gamma.grad()[c] += static_cast<T>(sum_dy_xh);
        beta.grad()[c] += static_cast<T>(sum_dy);
        const double a = double(gamma[c]) * inv_std_[c];
        // With batch statistics: a * (dy - mean(dy) - xh * mean(dy * xh)).
        const T scale = static_cast<T>(a);
        const T shift = training_cached_ ? static_cast<T>(a * sum_dy / count) : T(0);
        const T slope = training_cached_ ? static_cast<T>(a * sum_dy_xh / count) : T(0);
        for (std::size_t b = 0; b < n; ++b)
            plane(dx.data(), b * channels_ + c, spatial) =
                plane(grad_out.data(), b * channels_ + c, spatial) * scale - shift - plane(normalized_.data(), b * channels_ + c, spatial) * slope;
    }
    return dx;
}

template <typename T>
void BatchNorm<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma});
    out.push_back({prefix + ".beta", &beta});
}

template <typename T>
void BatchNorm<T>::collect_buffers(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".running_mean", &running_mean});
    out.push_back({prefix + ".running_var", &running_var});
}

// ---- Activations -----------------------------------------------------------

template <typename T>
BasicTensor<T> Relu<T>::forward(const BasicTensor<T>& x) {
    BasicTensor<T> y(x.shape());
    plane(y.data(), 0, y.size()) = plane(x.data(), 0, x.size()).max(T(0));
    output_ = y;
    cached_ = true;
    return y;
}

template <typename T>
BasicTensor<T> Relu<T>::backward(const BasicTensor<T>& grad_out) {
    require_cached(cached_, "relu");
    BasicTensor<T> dx(output_.shape());
    if (grad_out.size() != dx.size()) throw Error(ErrorKind::Shape, "relu: gradient shape mismatch");
    plane(dx.data(), 0, dx.size()) = (plane(output_.data(), 0, dx.size()) > T(0)).select(plane(grad_out.data(), 0, dx.size()), T(0));
    return dx;
}

template <typename T>
BasicTensor<T> Tanh<T>::forward(const BasicTensor<T>& x) {
    BasicTensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    output_ = y;
    cached_ = true;
    return y;
}

template <typename T>
BasicTensor<T> Tanh<T>::backward(const BasicTensor<T>& grad_out) {
    require_cached(cached_, "tanh");
    BasicTensor<T> dx(output_.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * (T(1) - output_[i] * output_[i]);
    return dx;
}

// ---- MaxPool2 --------------------------------------------------------------

template <typename T>
Shape MaxPool2<T>::output_shape(const Shape& in) {
    if (in.size() != 4 || in[2] < 2 || in[3] < 2)
        throw Error(ErrorKind::Shape, "maxpool expects [N,C,H>=2,W>=2], got " + shape_string(in));
    return {in[0], in[1], in[2] / 2, in[3] / 2};
}

template <typename T>
BasicTensor<T> MaxPool2<T>::forward(const BasicTensor<T>& x) {
    const Shape os = output_shape(x.shape());
    const std::size_t h = x.dim(2), w = x.dim(3), ho = os[2], wo = os[3];
    BasicTensor<T> y(os);
    argmax_.resize(y.size());
    for (std::size_t plane = 0; plane < os[0] * os[1]; ++plane) {
        const std::size_t in_off = plane * h * w;
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox) {
                std::size_t best = in_off + (2 * oy) * w + 2 * ox;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = in_off + (2 * oy + dy) * w + 2 * ox + dx;
                        if (x[idx] > x[best]) best = idx;
                    }
                const std::size_t o = (plane * ho + oy) * wo + ox;
                y[o] = x[best];
                argmax_[o] = best;
            }
    }
    in_shape_ = x.shape();
    cached_ = true;
    return y;
}

template <typename T>
BasicTensor<T> MaxPool2<T>::backward(const BasicTensor<T>& grad_out) {
    require_cached(cached_, "maxpool");
    if (grad_out.size() != argmax_.size()) throw Error(ErrorKind::Shape, "maxpool: gradient shape mismatch");
    BasicTensor<T> dx(in_shape_);
    for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += grad_out[o];
    return dx;
}

// ---- Embedding -------------------------------------------------------------

template <typename T>
Embedding<T>::Embedding(std::size_t count, std::size_t dim) : table({count, dim}), count_(count), dim_(dim) {}

template <typename T>
BasicTensor<T> Embedding<T>::forward(std::span<const int> ids) {
    BasicTensor<T> y({ids.size(), dim_});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= count_)
            throw Error(ErrorKind::Conditioning, "class id " + std::to_string(ids[i]) + " out of range");
        std::copy_n(table.data() + std::size_t(ids[i]) * dim_, dim_, y.data() + i * dim_);
    }
    ids_.assign(ids.begin(), ids.end());
    cached_ = true;
    return y;
}

template <typename T>
void Embedding<T>::backward(const BasicTensor<T>& grad_out) {
    require_cached(cached_, "embedding");
    if (grad_out.shape() != Shape{ids_.size(), dim_}) throw Error(ErrorKind::Shape, "embedding: gradient shape mismatch");
    ensure_grad(table);
    for (std::size_t i = 0; i < ids_.size(); ++i)
        for (std::size_t d = 0; d < dim_; ++d) table.grad()[std::size_t(ids_[i]) * dim_ + d] += grad_out[i * dim_ + d];
}

template <typename T>
void Embedding<T>::init(std::mt19937_64& rng, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : table.values()) v = static_cast<T>(dist(rng));
}

template <typename T>
void Embedding<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".table", &table});
}

template class Conv2d<float>;
template class Conv2d<double>;
template class Dense<float>;
template class Dense<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Relu<float>;
template class Relu<double>;
template class Tanh<float>;
template class Tanh<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class Embedding<float>;
template class Embedding<double>;

}  // namespace fxlab
