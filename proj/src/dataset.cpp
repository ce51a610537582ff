#include "drpriv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "drpriv/io.hpp"
#include "drpriv/rng.hpp"

namespace drpriv {

namespace {

constexpr std::uint64_t kSaltTemplate = 0x74656d706c617465ULL;
constexpr std::uint64_t kSaltNoise = 0x6e6f697365737464ULL;
constexpr std::uint64_t kSaltAccess = 0x616363657373ULL;
constexpr std::uint64_t kSaltSplit = 0x73706c6974ULL;

void append_image(ImageDataset& ds, const GrayImage& img, int subject,
                  const std::filesystem::path& file) {
    if (ds.images.empty()) {
        ds.height = img.height;
        ds.width = img.width;
    } else if (img.height != ds.height || img.width != ds.width) {
        throw std::runtime_error("load: image shape mismatch at " + file.string() + ": got " +
                                 std::to_string(img.height) + "x" + std::to_string(img.width) +
                                 ", expected " + std::to_string(ds.height) + "x" +
                                 std::to_string(ds.width));
    }
    std::vector<double> values(img.pixels.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<double>(img.pixels[i]) / 255.0;
    ds.images.push_back(std::move(values));
    ds.subject_ids.push_back(subject);
    ds.access_labels.push_back(0);
}

// Seeded in-place Fisher-Yates.
template <typename T>
void shuffle_with(std::vector<T>& v, RngStream& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.index(i)]);
}

std::vector<int> distinct_subjects(const ImageDataset& ds) {
    std::vector<int> subjects(ds.subject_ids);
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    return subjects;
}

// Low-frequency cosine template for one subject, normalized into
// [0.2, 0.8] so that post-noise clamping rarely bites.
std::vector<double> synth_template(std::size_t h, std::size_t w, std::uint64_t seed, int subject) {
    RngStream rng(mix_seed(mix_seed(seed, kSaltTemplate), static_cast<std::uint64_t>(subject)));
    constexpr int kModes = 3;
    double fy[kModes], fx[kModes], ph[kModes], amp[kModes];
    for (int k = 0; k < kModes; ++k) {
        fy[k] = static_cast<double>(1 + rng.index(3));
        fx[k] = static_cast<double>(1 + rng.index(3));
        ph[k] = rng.uniform(0.0, 6.283185307179586);
        amp[k] = rng.uniform(0.5, 1.0);
    }
    std::vector<double> img(h * w);
    double lo = 1e300, hi = -1e300;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double v = 0.0;
            for (int k = 0; k < kModes; ++k) {
                const double arg = 6.283185307179586 *
                                   (fy[k] * static_cast<double>(y) / static_cast<double>(h) +
                                    fx[k] * static_cast<double>(x) / static_cast<double>(w));
                v += amp[k] * std::cos(arg + ph[k]);
            }
            img[y * w + x] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi - lo < 1e-12) {
        std::fill(img.begin(), img.end(), 0.5);
    } else {
        for (double& v : img) v = 0.2 + 0.6 * (v - lo) / (hi - lo);
    }
    return img;
}

}  // namespace

ImageDataset load_image_directory(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
        throw std::runtime_error("load_image_directory: missing root " + root.string());

    std::vector<std::filesystem::path> subject_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory()) subject_dirs.push_back(entry.path());
    std::sort(subject_dirs.begin(), subject_dirs.end());
    if (subject_dirs.empty())
        throw std::runtime_error("load_image_directory: no subjects found under " + root.string());

    ImageDataset ds;
    ds.name = root.filename().string();
    for (std::size_t s = 0; s < subject_dirs.size(); ++s) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(subject_dirs[s]))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("load_image_directory: subject directory " +
                                     subject_dirs[s].string() + " contains no images");
        for (const auto& file : files)
            append_image(ds, read_pgm(file), static_cast<int>(s), file);
    }
    return ds;
}

ImageDataset load_manifest(const std::filesystem::path& manifest_path) {
    std::istringstream in(read_text_file(manifest_path));
    const std::filesystem::path base = manifest_path.parent_path();

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_manifest: empty manifest " + manifest_path.string());
    {
        auto header = split_csv_line(line);
        if (header.size() != 2 || header[0] != "path" || header[1] != "subject_id")
            throw std::runtime_error("load_manifest: " + manifest_path.string() +
                                     ": expected header 'path,subject_id'");
    }

    ImageDataset ds;
    ds.name = manifest_path.stem().string();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error("load_manifest: " + manifest_path.string() + ": line " +
                                     std::to_string(lineno) + ": expected 2 fields");
        int subject = 0;
        try {
            subject = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw std::runtime_error("load_manifest: " + manifest_path.string() + ": line " +
                                     std::to_string(lineno) + ": bad subject_id '" + fields[1] + "'");
        }
        const std::filesystem::path file = base / fields[0];
        append_image(ds, read_pgm(file), subject, file);
    }
    if (ds.images.empty())
        throw std::runtime_error("load_manifest: no rows in " + manifest_path.string());
    return ds;
}

ImageDataset preprocess(const ImageDataset& ds, std::size_t crop_h, std::size_t crop_w) {
    if (crop_h == 0 || crop_w == 0 || crop_h > ds.height || crop_w > ds.width)
        throw std::invalid_argument("preprocess: crop " + std::to_string(crop_h) + "x" +
                                    std::to_string(crop_w) + " invalid for " +
                                    std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                                    " images");
    const std::size_t off_y = (ds.height - crop_h) / 2;
    const std::size_t off_x = (ds.width - crop_w) / 2;

    ImageDataset out;
    out.name = ds.name;
    out.height = crop_h;
    out.width = crop_w;
    out.subject_ids = ds.subject_ids;
    out.access_labels = ds.access_labels;
    out.num_levels = ds.num_levels;
    out.images.reserve(ds.images.size());
    for (const auto& img : ds.images) {
        std::vector<double> cropped(crop_h * crop_w);
        for (std::size_t y = 0; y < crop_h; ++y)
            for (std::size_t x = 0; x < crop_w; ++x)
                cropped[y * crop_w + x] = img[(y + off_y) * ds.width + (x + off_x)];
        out.images.push_back(std::move(cropped));
    }
    return out;
}

ImageDataset assign_access_levels(const ImageDataset& ds, int m, std::uint64_t seed) {
    const std::vector<int> subjects = distinct_subjects(ds);
    if (m < 1) throw std::invalid_argument("assign_access_levels: m must be >= 1");
    if (static_cast<std::size_t>(m) > subjects.size())
        throw std::invalid_argument("assign_access_levels: m=" + std::to_string(m) +
                                    " exceeds subject count " + std::to_string(subjects.size()));

    std::vector<int> shuffled(subjects);
    RngStream rng(mix_seed(seed, kSaltAccess));
    shuffle_with(shuffled, rng);

    // First (S mod m) groups take one extra subject.
    const std::size_t S = shuffled.size();
    const std::size_t base = S / static_cast<std::size_t>(m);
    const std::size_t extra = S % static_cast<std::size_t>(m);
    std::map<int, int> group_of;
    std::size_t pos = 0;
    for (int g = 0; g < m; ++g) {
        const std::size_t count = base + (static_cast<std::size_t>(g) < extra ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i) group_of[shuffled[pos++]] = g;
    }

    ImageDataset out = ds;
    out.num_levels = m;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.access_labels[i] = group_of.at(out.subject_ids[i]);
    return out;
}

SplitPair split_train_test(const ImageDataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split_train_test: test_fraction must lie in (0,1)");

    std::map<int, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < ds.size(); ++i) by_subject[ds.subject_ids[i]].push_back(i);

    std::vector<bool> is_test(ds.size(), false);
    for (auto& [subject, indices] : by_subject) {
        if (indices.size() < 2)
            throw std::runtime_error("split_train_test: subject " + std::to_string(subject) +
                                     " has only " + std::to_string(indices.size()) +
                                     " image(s); need at least 2");
        const auto n_test = static_cast<std::size_t>(
            std::ceil(test_fraction * static_cast<double>(indices.size())));
        if (n_test >= indices.size())
            throw std::runtime_error("split_train_test: fraction " + format_g9(test_fraction) +
                                     " leaves no training images for subject " +
                                     std::to_string(subject));
        RngStream rng(mix_seed(mix_seed(seed, kSaltSplit), static_cast<std::uint64_t>(subject)));
        shuffle_with(indices, rng);
        for (std::size_t i = 0; i < n_test; ++i) is_test[indices[i]] = true;
    }

    SplitPair pair;
    for (ImageDataset* part : {&pair.train, &pair.test}) {
        part->name = ds.name;
        part->height = ds.height;
        part->width = ds.width;
        part->num_levels = ds.num_levels;
    }
    pair.train.name += "/train";
    pair.test.name += "/test";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ImageDataset& part = is_test[i] ? pair.test : pair.train;
        part.images.push_back(ds.images[i]);
        part.subject_ids.push_back(ds.subject_ids[i]);
        part.access_labels.push_back(ds.access_labels[i]);
    }
    return pair;
}

ImageDataset synth_dataset(const SynthSpec& spec) {
    if (spec.num_subjects < 1 || spec.images_per_subject < 1)
        throw std::invalid_argument("synth_dataset: counts must be positive");
    if (spec.h < 8 || spec.w < 8)
        throw std::invalid_argument("synth_dataset: image size must be at least 8x8");
    if (spec.noise_std < 0.0)
        throw std::invalid_argument("synth_dataset: noise_std must be non-negative");

    ImageDataset ds;
    ds.name = "synth";
    ds.height = spec.h;
    ds.width = spec.w;
    for (int s = 0; s < spec.num_subjects; ++s) {
        const std::vector<double> base = synth_template(spec.h, spec.w, spec.seed, s);
        for (int i = 0; i < spec.images_per_subject; ++i) {
            RngStream noise(mix_seed(mix_seed(spec.seed, kSaltNoise),
                                     static_cast<std::uint64_t>(s) * 1000003ULL +
                                         static_cast<std::uint64_t>(i)));
            std::vector<double> img(base);
            if (spec.noise_std > 0.0)
                for (double& v : img)
                    v = std::clamp(v + spec.noise_std * noise.normal(), 0.0, 1.0);
            ds.images.push_back(std::move(img));
            ds.subject_ids.push_back(s);
            ds.access_labels.push_back(0);
        }
    }
    return ds;
}

Tensor mean_image(const ImageDataset& ds) {
    if (ds.images.empty()) throw std::invalid_argument("mean_image: empty dataset");
    Tensor mean({ds.height, ds.width});
    for (const auto& img : ds.images)
        for (std::size_t i = 0; i < img.size(); ++i) mean[i] += img[i];
    const double inv = 1.0 / static_cast<double>(ds.images.size());
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] *= inv;
    return mean;
}

Tensor pack_batch(const ImageDataset& ds, const std::vector<std::size_t>& indices) {
    Tensor batch({indices.size(), 1, ds.height, ds.width});
    const std::size_t px = ds.pixels();
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& img = ds.images.at(indices[b]);
        std::copy(img.begin(), img.end(), batch.data() + b * px);
    }
    return batch;
}

Tensor pack_labels_one_hot(const ImageDataset& ds, const std::vector<std::size_t>& indices) {
    Tensor labels({indices.size(), static_cast<std::size_t>(ds.num_levels)});
    for (std::size_t b = 0; b < indices.size(); ++b)
        labels.at2(b, static_cast<std::size_t>(ds.access_labels.at(indices[b]))) = 1.0;
    return labels;
}

}  // namespace drpriv
