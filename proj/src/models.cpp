#include "drpriv/models.hpp"

#include <sstream>

#include "drpriv/io.hpp"
#include "drpriv/rng.hpp"

namespace drpriv {

namespace {

std::string hash_config(std::size_t h, std::size_t w, std::size_t d_prime, int m,
                        const ModelWidths& ws, std::uint64_t seed) {
    std::ostringstream os;
    os << "autogan-drp;h=" << h << ";w=" << w << ";d_prime=" << d_prime << ";m=" << m
       << ";g=" << ws.g_conv1 << "," << ws.g_conv2 << "," << ws.g_dense << ";r=" << ws.r_dense
       << "," << ws.r_conv << ";d=" << ws.d1 << "," << ws.d2 << "," << ws.d3 << ";c=" << ws.c1
       << "," << ws.c2 << "," << ws.c3 << ";seed=" << seed;
    const std::string text = os.str();
    const std::uint64_t digest = fnv1a64(text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

}  // namespace

NetworkSpec generator_spec(std::size_t h, std::size_t w, std::size_t d_prime,
                           const ModelWidths& ws) {
    const std::size_t bottleneck = ws.g_conv2 * ((h + 3) / 4) * ((w + 3) / 4);
    return build_network(
        {1, h, w},
        {LayerSpec::conv2d(1, ws.g_conv1, 5, 5, 2, Padding::same), LayerSpec::tanh(),
         LayerSpec::conv2d(ws.g_conv1, ws.g_conv2, 5, 5, 2, Padding::same), LayerSpec::tanh(),
         LayerSpec::flatten(), LayerSpec::dense(bottleneck, ws.g_dense), LayerSpec::tanh(),
         LayerSpec::dense(ws.g_dense, d_prime), LayerSpec::tanh()});
}

NetworkSpec reconstructor_spec(std::size_t h, std::size_t w, std::size_t d_prime,
                               const ModelWidths& ws) {
    if (h % 4 != 0 || w % 4 != 0)
        throw std::invalid_argument(
            "reconstructor_spec: invalid shape composition: the two stride-2 stages need "
            "h and w divisible by 4, got " +
            std::to_string(h) + "x" + std::to_string(w));
    const std::size_t h4 = h / 4, w4 = w / 4;
    return build_network(
        {d_prime},
        {LayerSpec::dense(d_prime, ws.r_dense), LayerSpec::tanh(),
         LayerSpec::dense(ws.r_dense, ws.g_conv2 * h4 * w4), LayerSpec::tanh(),
         LayerSpec::reshape({ws.g_conv2, h4, w4}),
         LayerSpec::tconv2d(ws.g_conv2, ws.r_conv, 5, 5, 2, Padding::same), LayerSpec::tanh(),
         LayerSpec::tconv2d(ws.r_conv, 1, 5, 5, 2, Padding::same), LayerSpec::sigmoid()});
}

NetworkSpec discriminator_spec(std::size_t h, std::size_t w, const ModelWidths& ws) {
    return build_network(
        {1, h, w},
        {LayerSpec::flatten(), LayerSpec::dense(h * w, ws.d1), LayerSpec::tanh(),
         LayerSpec::dense(ws.d1, ws.d2), LayerSpec::tanh(), LayerSpec::dense(ws.d2, ws.d3),
         LayerSpec::tanh(), LayerSpec::dense(ws.d3, 1), LayerSpec::sigmoid()});
}

NetworkSpec classifier_spec(std::size_t d_prime, int m, const ModelWidths& ws) {
    return build_network(
        {d_prime},
        {LayerSpec::dense(d_prime, ws.c1), LayerSpec::tanh(), LayerSpec::dense(ws.c1, ws.c2),
         LayerSpec::tanh(), LayerSpec::dense(ws.c2, ws.c3), LayerSpec::tanh(),
         LayerSpec::dense(ws.c3, static_cast<std::size_t>(m)), LayerSpec::softmax()});
}

ModelBundle build_models(std::size_t h, std::size_t w, std::size_t d_prime, int m,
                         const ModelWidths& ws, std::uint64_t seed) {
    if (h < 8 || w < 8)
        throw std::invalid_argument("build_models: image sides must be at least 8 pixels");
    if (d_prime < 1) throw std::invalid_argument("build_models: d_prime must be >= 1");
    if (m < 1) throw std::invalid_argument("build_models: m must be >= 1");
    if (h % 4 != 0 || w % 4 != 0)
        throw std::invalid_argument(
            "build_models: invalid shape composition: the reconstructor's two stride-2 "
            "stages need h and w divisible by 4, got " +
            std::to_string(h) + "x" + std::to_string(w));

    ModelBundle b;
    b.d_prime = d_prime;
    b.image_h = h;
    b.image_w = w;
    b.num_levels = m;
    b.widths = ws;
    b.init_seed = seed;
    b.config_hash = hash_config(h, w, d_prime, m, ws, seed);

    b.generator = generator_spec(h, w, d_prime, ws);
    b.reconstructor = reconstructor_spec(h, w, d_prime, ws);
    b.discriminator = discriminator_spec(h, w, ws);
    b.classifier = classifier_spec(d_prime, m, ws);

    b.gen_params = init_params(b.generator, mix_seed(seed, 1));
    b.rec_params = init_params(b.reconstructor, mix_seed(seed, 2));
    b.disc_params = init_params(b.discriminator, mix_seed(seed, 3));
    b.cls_params = init_params(b.classifier, mix_seed(seed, 4));
    return b;
}

Tensor transform(const ModelBundle& bundle, const Tensor& images) {
    return forward(bundle.generator, bundle.gen_params, images);
}

Tensor reconstruct(const ModelBundle& bundle, const Tensor& codes) {
    return forward(bundle.reconstructor, bundle.rec_params, codes);
}

double compression_ratio(const ModelBundle& bundle) {
    return static_cast<double>(bundle.image_h * bundle.image_w) /
           static_cast<double>(bundle.d_prime);
}

}  // namespace drpriv
