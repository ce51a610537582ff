#include "drpriv/nn.hpp"

#include <algorithm>
#include <cmath>

#include "drpriv/rng.hpp"

namespace drpriv {

namespace {

constexpr std::uint64_t kSaltInit = 0x696e6974ULL;

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::tconv2d: return "tconv2d";
        case LayerKind::tanh_act: return "tanh";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::softmax: return "softmax";
        case LayerKind::flatten: return "flatten";
        case LayerKind::reshape: return "reshape";
    }
    return "?";
}

[[noreturn]] void build_fail(std::size_t layer, const LayerSpec& l, const std::string& msg) {
    throw std::invalid_argument("build_network: layer " + std::to_string(layer) + " (" +
                                kind_name(l.kind) + "): " + msg);
}

// Spatial geometry shared by conv2d and tconv2d. "big" is the conv-input
// side, "small" the conv-output side; a tconv2d maps small -> big.
struct Geom2D {
    std::size_t big_h = 0, big_w = 0;
    std::size_t small_h = 0, small_w = 0;
    std::size_t pad_top = 0, pad_left = 0;
};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t same_pad_before(std::size_t big, std::size_t k, std::size_t s) {
    const std::size_t small = ceil_div(big, s);
    const std::size_t span = (small - 1) * s + k;
    const std::size_t total = span > big ? span - big : 0;
    return total / 2;  // remainder goes after (bottom/right)
}

Geom2D conv_geometry(std::size_t in_h, std::size_t in_w, const LayerSpec& l) {
    Geom2D g;
    g.big_h = in_h;
    g.big_w = in_w;
    if (l.padding == Padding::valid) {
        g.small_h = (in_h - l.kh) / l.stride + 1;
        g.small_w = (in_w - l.kw) / l.stride + 1;
    } else {
        g.small_h = ceil_div(in_h, l.stride);
        g.small_w = ceil_div(in_w, l.stride);
        g.pad_top = same_pad_before(in_h, l.kh, l.stride);
        g.pad_left = same_pad_before(in_w, l.kw, l.stride);
    }
    return g;
}

Geom2D tconv_geometry(std::size_t in_h, std::size_t in_w, const LayerSpec& l) {
    Geom2D g;
    g.small_h = in_h;
    g.small_w = in_w;
    if (l.padding == Padding::valid) {
        g.big_h = (in_h - 1) * l.stride + l.kh;
        g.big_w = (in_w - 1) * l.stride + l.kw;
    } else {
        g.big_h = in_h * l.stride;
        g.big_w = in_w * l.stride;
        g.pad_top = same_pad_before(g.big_h, l.kh, l.stride);
        g.pad_left = same_pad_before(g.big_w, l.kw, l.stride);
    }
    return g;
}

std::vector<std::size_t> with_batch(std::size_t batch, const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> full;
    full.reserve(shape.size() + 1);
    full.push_back(batch);
    full.insert(full.end(), shape.begin(), shape.end());
    return full;
}

void check_param_shape(const Tensor& t, const std::vector<std::size_t>& want,
                       const std::string& name) {
    if (t.shape() != want)
        throw std::invalid_argument("forward: param " + name + " has shape " +
                                    Tensor::shape_string(t.shape()) + ", expected " +
                                    Tensor::shape_string(want));
}

std::vector<std::size_t> weight_shape(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::dense: return {l.out, l.in};
        case LayerKind::conv2d: return {l.out_ch, l.in_ch, l.kh, l.kw};
        case LayerKind::tconv2d: return {l.in_ch, l.out_ch, l.kh, l.kw};
        default: return {};
    }
}

std::vector<std::size_t> bias_shape(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::dense: return {l.out};
        case LayerKind::conv2d:
        case LayerKind::tconv2d: return {l.out_ch};
        default: return {};
    }
}

}  // namespace

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
    if (in == 0 || out == 0) throw std::invalid_argument("dense: widths must be positive");
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.in = in;
    l.out = out;
    return l;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                            std::size_t stride, Padding padding) {
    if (in_ch == 0 || out_ch == 0 || kh == 0 || kw == 0 || stride == 0)
        throw std::invalid_argument("conv2d: hyperparameters must be positive");
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kh = kh;
    l.kw = kw;
    l.stride = stride;
    l.padding = padding;
    return l;
}

LayerSpec LayerSpec::tconv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                             std::size_t stride, Padding padding) {
    LayerSpec l = conv2d(in_ch, out_ch, kh, kw, stride, padding);
    l.kind = LayerKind::tconv2d;
    return l;
}

LayerSpec LayerSpec::tanh() {
    LayerSpec l;
    l.kind = LayerKind::tanh_act;
    return l;
}

LayerSpec LayerSpec::sigmoid() {
    LayerSpec l;
    l.kind = LayerKind::sigmoid;
    return l;
}

LayerSpec LayerSpec::softmax() {
    LayerSpec l;
    l.kind = LayerKind::softmax;
    return l;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
}

LayerSpec LayerSpec::reshape(std::vector<std::size_t> target_shape) {
    if (target_shape.empty()) throw std::invalid_argument("reshape: empty target shape");
    LayerSpec l;
    l.kind = LayerKind::reshape;
    l.target_shape = std::move(target_shape);
    return l;
}

NetworkSpec build_network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers) {
    if (input_shape.empty() || Tensor::compute_size(input_shape) == 0)
        throw std::invalid_argument("build_network: input shape must be non-empty");

    NetworkSpec net;
    net.input_shape = input_shape;
    net.layers = std::move(layers);
    net.shapes.push_back(input_shape);

    std::vector<std::size_t> cur = std::move(input_shape);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        switch (l.kind) {
            case LayerKind::dense:
                if (cur.size() != 1 || cur[0] != l.in)
                    build_fail(i, l, "expected input shape (" + std::to_string(l.in) + "), got " +
                                         Tensor::shape_string(cur));
                cur = {l.out};
                break;
            case LayerKind::conv2d: {
                if (cur.size() != 3 || cur[0] != l.in_ch)
                    build_fail(i, l, "expected rank-3 input with " + std::to_string(l.in_ch) +
                                         " channels, got " + Tensor::shape_string(cur));
                if (l.padding == Padding::valid && (cur[1] < l.kh || cur[2] < l.kw))
                    build_fail(i, l, "kernel larger than input under valid padding");
                const Geom2D g = conv_geometry(cur[1], cur[2], l);
                cur = {l.out_ch, g.small_h, g.small_w};
                break;
            }
            case LayerKind::tconv2d: {
                if (cur.size() != 3 || cur[0] != l.in_ch)
                    build_fail(i, l, "expected rank-3 input with " + std::to_string(l.in_ch) +
                                         " channels, got " + Tensor::shape_string(cur));
                const Geom2D g = tconv_geometry(cur[1], cur[2], l);
                cur = {l.out_ch, g.big_h, g.big_w};
                break;
            }
            case LayerKind::tanh_act:
            case LayerKind::sigmoid:
                break;  // shape preserved
            case LayerKind::softmax:
                if (cur.size() != 1)
                    build_fail(i, l, "expected rank-1 input, got " + Tensor::shape_string(cur));
                break;
            case LayerKind::flatten:
                cur = {Tensor::compute_size(cur)};
                break;
            case LayerKind::reshape:
                if (Tensor::compute_size(l.target_shape) != Tensor::compute_size(cur))
                    build_fail(i, l, "cannot reshape " + Tensor::shape_string(cur) + " into " +
                                         Tensor::shape_string(l.target_shape));
                cur = l.target_shape;
                break;
        }
        net.shapes.push_back(cur);
    }
    net.output_shape = cur;
    return net;
}

std::size_t NetworkSpec::num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        if (l.parameterized())
            n += Tensor::compute_size(weight_shape(l)) + Tensor::compute_size(bias_shape(l));
    return n;
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::out_of_range("ParamSet: no tensor named " + name);
    return it->second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::out_of_range("ParamSet: no tensor named " + name);
    return it->second;
}

std::size_t ParamSet::total_size() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors) n += t.size();
    return n;
}

std::string weight_name(std::size_t layer_index) {
    return "layer" + std::to_string(layer_index) + ".weight";
}

std::string bias_name(std::size_t layer_index) {
    return "layer" + std::to_string(layer_index) + ".bias";
}

ParamSet init_params(const NetworkSpec& net, std::uint64_t seed) {
    RngStream rng(mix_seed(seed, kSaltInit));
    ParamSet params;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        if (!l.parameterized()) continue;
        double fan_in = 0.0, fan_out = 0.0;
        if (l.kind == LayerKind::dense) {
            fan_in = static_cast<double>(l.in);
            fan_out = static_cast<double>(l.out);
        } else {
            fan_in = static_cast<double>(l.in_ch * l.kh * l.kw);
            fan_out = static_cast<double>(l.out_ch * l.kh * l.kw);
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Tensor w(weight_shape(l));
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = rng.uniform(-limit, limit);
        params.tensors.emplace(weight_name(i), std::move(w));
        params.tensors.emplace(bias_name(i), Tensor(bias_shape(l)));
    }
    return params;
}

namespace {

Tensor forward_dense(const LayerSpec& l, const Tensor& w, const Tensor& b, const Tensor& x) {
    const std::size_t B = x.dim(0);
    Tensor y({B, l.out});
    for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t o = 0; o < l.out; ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < l.in; ++i) acc += w.at2(o, i) * x.at2(n, i);
            y.at2(n, o) = acc;
        }
    }
    return y;
}

Tensor forward_conv2d(const LayerSpec& l, const Tensor& w, const Tensor& b, const Tensor& x) {
    const std::size_t B = x.dim(0), H = x.dim(2), W = x.dim(3);
    const Geom2D g = conv_geometry(H, W, l);
    Tensor y({B, l.out_ch, g.small_h, g.small_w});
    const auto pt = static_cast<long long>(g.pad_top);
    const auto pl = static_cast<long long>(g.pad_left);
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t co = 0; co < l.out_ch; ++co)
            for (std::size_t oy = 0; oy < g.small_h; ++oy)
                for (std::size_t ox = 0; ox < g.small_w; ++ox) {
                    double acc = b[co];
                    for (std::size_t ci = 0; ci < l.in_ch; ++ci)
                        for (std::size_t u = 0; u < l.kh; ++u) {
                            const long long iy = static_cast<long long>(oy * l.stride + u) - pt;
                            if (iy < 0 || iy >= static_cast<long long>(H)) continue;
                            for (std::size_t v = 0; v < l.kw; ++v) {
                                const long long ix =
                                    static_cast<long long>(ox * l.stride + v) - pl;
                                if (ix < 0 || ix >= static_cast<long long>(W)) continue;
                                acc += w.at4(co, ci, u, v) *
                                       x.at4(n, ci, static_cast<std::size_t>(iy),
                                             static_cast<std::size_t>(ix));
                            }
                        }
                    y.at4(n, co, oy, ox) = acc;
                }
    return y;
}

// Direct scatter: deliberately not expressed through the conv2d gather so
// the adjoint identity <conv(x),y> = <x,tconv(y)> is a two-route check.
Tensor forward_tconv2d(const LayerSpec& l, const Tensor& w, const Tensor& b, const Tensor& x) {
    const std::size_t B = x.dim(0), IH = x.dim(2), IW = x.dim(3);
    const Geom2D g = tconv_geometry(IH, IW, l);
    Tensor y({B, l.out_ch, g.big_h, g.big_w});
    const auto pt = static_cast<long long>(g.pad_top);
    const auto pl = static_cast<long long>(g.pad_left);
    for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t ci = 0; ci < l.in_ch; ++ci)
            for (std::size_t iy = 0; iy < IH; ++iy)
                for (std::size_t ix = 0; ix < IW; ++ix) {
                    const double xv = x.at4(n, ci, iy, ix);
                    for (std::size_t co = 0; co < l.out_ch; ++co)
                        for (std::size_t u = 0; u < l.kh; ++u) {
                            const long long jy = static_cast<long long>(iy * l.stride + u) - pt;
                            if (jy < 0 || jy >= static_cast<long long>(g.big_h)) continue;
                            for (std::size_t v = 0; v < l.kw; ++v) {
                                const long long jx =
                                    static_cast<long long>(ix * l.stride + v) - pl;
                                if (jx < 0 || jx >= static_cast<long long>(g.big_w)) continue;
                                y.at4(n, co, static_cast<std::size_t>(jy),
                                      static_cast<std::size_t>(jx)) += w.at4(ci, co, u, v) * xv;
                            }
                        }
                }
        for (std::size_t co = 0; co < l.out_ch; ++co)
            for (std::size_t jy = 0; jy < g.big_h; ++jy)
                for (std::size_t jx = 0; jx < g.big_w; ++jx) y.at4(n, co, jy, jx) += b[co];
    }
    return y;
}

Tensor forward_softmax(const Tensor& x) {
    const std::size_t B = x.dim(0), K = x.dim(1);
    Tensor y({B, K});
    for (std::size_t n = 0; n < B; ++n) {
        double mx = x.at2(n, 0);
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, x.at2(n, k));
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double e = std::exp(x.at2(n, k) - mx);
            y.at2(n, k) = e;
            z += e;
        }
        for (std::size_t k = 0; k < K; ++k) y.at2(n, k) /= z;
    }
    return y;
}

}  // namespace

Tensor forward(const NetworkSpec& net, const ParamSet& params, const Tensor& input,
               ForwardTrace* trace) {
    if (input.rank() == 0 || input.shape().size() != net.input_shape.size() + 1 ||
        !std::equal(net.input_shape.begin(), net.input_shape.end(), input.shape().begin() + 1))
        throw std::invalid_argument("forward: input shape " +
                                    Tensor::shape_string(input.shape()) +
                                    " does not match network input " +
                                    Tensor::shape_string(net.input_shape));
    const std::size_t B = input.dim(0);

    if (trace) {
        trace->activations.clear();
        trace->activations.reserve(net.layers.size() + 1);
        trace->activations.push_back(input);
    }

    Tensor cur = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        Tensor next;
        switch (l.kind) {
            case LayerKind::dense: {
                const Tensor& w = params.at(weight_name(i));
                const Tensor& b = params.at(bias_name(i));
                check_param_shape(w, weight_shape(l), weight_name(i));
                check_param_shape(b, bias_shape(l), bias_name(i));
                next = forward_dense(l, w, b, cur);
                break;
            }
            case LayerKind::conv2d: {
                const Tensor& w = params.at(weight_name(i));
                const Tensor& b = params.at(bias_name(i));
                check_param_shape(w, weight_shape(l), weight_name(i));
                check_param_shape(b, bias_shape(l), bias_name(i));
                next = forward_conv2d(l, w, b, cur);
                break;
            }
            case LayerKind::tconv2d: {
                const Tensor& w = params.at(weight_name(i));
                const Tensor& b = params.at(bias_name(i));
                check_param_shape(w, weight_shape(l), weight_name(i));
                check_param_shape(b, bias_shape(l), bias_name(i));
                next = forward_tconv2d(l, w, b, cur);
                break;
            }
            case LayerKind::tanh_act:
                next = cur;
                for (std::size_t j = 0; j < next.size(); ++j) next[j] = std::tanh(next[j]);
                break;
            case LayerKind::sigmoid:
                next = cur;
                for (std::size_t j = 0; j < next.size(); ++j)
                    next[j] = 1.0 / (1.0 + std::exp(-next[j]));
                break;
            case LayerKind::softmax:
                next = forward_softmax(cur);
                break;
            case LayerKind::flatten:
            case LayerKind::reshape:
                next = cur.reshaped(with_batch(B, net.shapes[i + 1]));
                break;
        }
        cur = std::move(next);
        if (trace) trace->activations.push_back(cur);
    }
    return cur;
}

BackwardResult backward(const NetworkSpec& net, const ParamSet& params, const ForwardTrace& trace,
                        const Tensor& output_grad) {
    if (trace.activations.size() != net.layers.size() + 1)
        throw std::invalid_argument("backward: trace does not match network depth");
    if (!trace.activations.back().same_shape(output_grad))
        throw std::invalid_argument("backward: output_grad shape " +
                                    Tensor::shape_string(output_grad.shape()) +
                                    " does not match forward output " +
                                    Tensor::shape_string(trace.activations.back().shape()));
    const std::size_t B = output_grad.dim(0);

    BackwardResult res;
    Tensor g = output_grad;
    for (std::size_t ii = net.layers.size(); ii-- > 0;) {
        const LayerSpec& l = net.layers[ii];
        const Tensor& x = trace.activations[ii];
        const Tensor& y = trace.activations[ii + 1];
        Tensor gx;
        switch (l.kind) {
            case LayerKind::dense: {
                const Tensor& w = params.at(weight_name(ii));
                Tensor gw(w.shape()), gb({l.out});
                gx = Tensor({B, l.in});
                for (std::size_t n = 0; n < B; ++n)
                    for (std::size_t o = 0; o < l.out; ++o) {
                        const double gv = g.at2(n, o);
                        gb[o] += gv;
                        for (std::size_t i = 0; i < l.in; ++i) {
                            gw.at2(o, i) += gv * x.at2(n, i);
                            gx.at2(n, i) += gv * w.at2(o, i);
                        }
                    }
                res.param_grads.tensors.emplace(weight_name(ii), std::move(gw));
                res.param_grads.tensors.emplace(bias_name(ii), std::move(gb));
                break;
            }
            case LayerKind::conv2d: {
                const Tensor& w = params.at(weight_name(ii));
                const std::size_t H = x.dim(2), W = x.dim(3);
                const Geom2D geo = conv_geometry(H, W, l);
                const auto pt = static_cast<long long>(geo.pad_top);
                const auto pl = static_cast<long long>(geo.pad_left);
                Tensor gw(w.shape()), gb({l.out_ch});
                gx = Tensor(x.shape());
                for (std::size_t n = 0; n < B; ++n)
                    for (std::size_t co = 0; co < l.out_ch; ++co)
                        for (std::size_t oy = 0; oy < geo.small_h; ++oy)
                            for (std::size_t ox = 0; ox < geo.small_w; ++ox) {
                                const double gv = g.at4(n, co, oy, ox);
                                gb[co] += gv;
                                for (std::size_t ci = 0; ci < l.in_ch; ++ci)
                                    for (std::size_t u = 0; u < l.kh; ++u) {
                                        const long long iy =
                                            static_cast<long long>(oy * l.stride + u) - pt;
                                        if (iy < 0 || iy >= static_cast<long long>(H)) continue;
                                        for (std::size_t v = 0; v < l.kw; ++v) {
                                            const long long ix =
                                                static_cast<long long>(ox * l.stride + v) - pl;
                                            if (ix < 0 || ix >= static_cast<long long>(W))
                                                continue;
                                            const auto yy = static_cast<std::size_t>(iy);
                                            const auto xx = static_cast<std::size_t>(ix);
                                            gw.at4(co, ci, u, v) += gv * x.at4(n, ci, yy, xx);
                                            gx.at4(n, ci, yy, xx) += gv * w.at4(co, ci, u, v);
                                        }
                                    }
                            }
                res.param_grads.tensors.emplace(weight_name(ii), std::move(gw));
                res.param_grads.tensors.emplace(bias_name(ii), std::move(gb));
                break;
            }
            case LayerKind::tconv2d: {
                const Tensor& w = params.at(weight_name(ii));
                const std::size_t IH = x.dim(2), IW = x.dim(3);
                const Geom2D geo = tconv_geometry(IH, IW, l);
                const auto pt = static_cast<long long>(geo.pad_top);
                const auto pl = static_cast<long long>(geo.pad_left);
                Tensor gw(w.shape()), gb({l.out_ch});
                gx = Tensor(x.shape());
                for (std::size_t n = 0; n < B; ++n) {
                    for (std::size_t co = 0; co < l.out_ch; ++co)
                        for (std::size_t jy = 0; jy < geo.big_h; ++jy)
                            for (std::size_t jx = 0; jx < geo.big_w; ++jx)
                                gb[co] += g.at4(n, co, jy, jx);
                    for (std::size_t ci = 0; ci < l.in_ch; ++ci)
                        for (std::size_t iy = 0; iy < IH; ++iy)
                            for (std::size_t ix = 0; ix < IW; ++ix) {
                                const double xv = x.at4(n, ci, iy, ix);
                                double acc = 0.0;
                                for (std::size_t co = 0; co < l.out_ch; ++co)
                                    for (std::size_t u = 0; u < l.kh; ++u) {
                                        const long long jy =
                                            static_cast<long long>(iy * l.stride + u) - pt;
                                        if (jy < 0 || jy >= static_cast<long long>(geo.big_h))
                                            continue;
                                        for (std::size_t v = 0; v < l.kw; ++v) {
                                            const long long jx =
                                                static_cast<long long>(ix * l.stride + v) - pl;
                                            if (jx < 0 ||
                                                jx >= static_cast<long long>(geo.big_w))
                                                continue;
                                            const double gv =
                                                g.at4(n, co, static_cast<std::size_t>(jy),
                                                      static_cast<std::size_t>(jx));
                                            acc += w.at4(ci, co, u, v) * gv;
                                            gw.at4(ci, co, u, v) += xv * gv;
                                        }
                                    }
                                gx.at4(n, ci, iy, ix) = acc;
                            }
                }
                res.param_grads.tensors.emplace(weight_name(ii), std::move(gw));
                res.param_grads.tensors.emplace(bias_name(ii), std::move(gb));
                break;
            }
            case LayerKind::tanh_act:
                gx = g;
                for (std::size_t j = 0; j < gx.size(); ++j) gx[j] *= 1.0 - y[j] * y[j];
                break;
            case LayerKind::sigmoid:
                gx = g;
                for (std::size_t j = 0; j < gx.size(); ++j) gx[j] *= y[j] * (1.0 - y[j]);
                break;
            case LayerKind::softmax: {
                const std::size_t K = y.dim(1);
                gx = Tensor({B, K});
                for (std::size_t n = 0; n < B; ++n) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < K; ++k) s += g.at2(n, k) * y.at2(n, k);
                    for (std::size_t k = 0; k < K; ++k)
                        gx.at2(n, k) = y.at2(n, k) * (g.at2(n, k) - s);
                }
                break;
            }
            case LayerKind::flatten:
            case LayerKind::reshape:
                gx = g.reshaped(x.shape());
                break;
        }
        g = std::move(gx);
    }
    res.input_grad = std::move(g);
    return res;
}

void sgd_update(ParamSet& params, const ParamSet& grads, double lr) {
    if (lr < 0.0) throw std::invalid_argument("sgd_update: negative learning rate");
    if (params.tensors.size() != grads.tensors.size())
        throw std::invalid_argument("sgd_update: parameter/gradient name sets differ");
    for (auto& [name, p] : params.tensors) {
        const Tensor& g = grads.at(name);
        if (!p.same_shape(g))
            throw std::invalid_argument("sgd_update: shape mismatch for " + name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw DivergenceError("sgd_update: non-finite gradient in " + name);
            p[i] -= lr * g[i];
        }
    }
}

FiniteDiffReport finite_diff_check(const NetworkSpec& net, const ParamSet& params,
                                   const Tensor& input, double tol, double gradient_scale) {
    constexpr double kStep = 1e-5;
    constexpr double kFloor = 1e-3;  // denominator floor for near-zero gradients

    ForwardTrace trace;
    const Tensor out = forward(net, params, input, &trace);
    Tensor ones(out.shape());
    for (std::size_t i = 0; i < ones.size(); ++i) ones[i] = 1.0;
    BackwardResult analytic = backward(net, params, trace, ones);

    const auto head = [&](const ParamSet& p, const Tensor& x) {
        const Tensor o = forward(net, p, x);
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += o[i];
        return s;
    };

    double max_rel = 0.0;
    const auto account = [&](double a, double n) {
        const double rel =
            std::abs(a * gradient_scale - n) / std::max({std::abs(a), std::abs(n), kFloor});
        max_rel = std::max(max_rel, rel);
    };

    ParamSet probe = params;
    for (auto& [name, t] : probe.tensors) {
        const Tensor& ga = analytic.param_grads.at(name);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double orig = t[i];
            t[i] = orig + kStep;
            const double fp = head(probe, input);
            t[i] = orig - kStep;
            const double fm = head(probe, input);
            t[i] = orig;
            account(ga[i], (fp - fm) / (2.0 * kStep));
        }
    }

    Tensor xprobe = input;
    for (std::size_t i = 0; i < xprobe.size(); ++i) {
        const double orig = xprobe[i];
        xprobe[i] = orig + kStep;
        const double fp = head(params, xprobe);
        xprobe[i] = orig - kStep;
        const double fm = head(params, xprobe);
        xprobe[i] = orig;
        account(analytic.input_grad[i], (fp - fm) / (2.0 * kStep));
    }

    FiniteDiffReport report;
    report.max_rel_err = max_rel;
    report.pass = max_rel < tol;
    return report;
}

}  // namespace drpriv
