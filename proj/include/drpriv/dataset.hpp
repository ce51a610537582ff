#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drpriv/tensor.hpp"

namespace drpriv {

// Grayscale image corpus. Pixel values live in [0,1]; all images share
// one shape. Each image carries a subject identity and an access-level
// label in [0, num_levels).
struct ImageDataset {
    std::string name;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::vector<double>> images;  // each of size height*width
    std::vector<int> subject_ids;
    std::vector<int> access_labels;
    int num_levels = 1;

    std::size_t size() const { return images.size(); }
    std::size_t pixels() const { return height * width; }
};

struct SplitPair {
    ImageDataset train;
    ImageDataset test;
};

struct SynthSpec {
    int num_subjects = 2;
    int images_per_subject = 10;
    std::size_t h = 16;
    std::size_t w = 16;
    double noise_std = 0.05;
    std::uint64_t seed = 1;
};

// Directory layout <root>/<subject_name>/<image>.pgm. Subjects are
// ordered lexicographically by directory name and numbered from 0.
ImageDataset load_image_directory(const std::filesystem::path& root);

// CSV manifest with header `path,subject_id`; paths are resolved
// relative to the manifest's directory.
ImageDataset load_manifest(const std::filesystem::path& manifest_path);

// Center crop every image to crop_h x crop_w; labels untouched.
ImageDataset preprocess(const ImageDataset& ds, std::size_t crop_h, std::size_t crop_w);

// Partition the distinct subjects into m seeded random groups whose
// sizes differ by at most one; the group index becomes the access label.
ImageDataset assign_access_levels(const ImageDataset& ds, int m, std::uint64_t seed);

// Per subject, ceil(test_fraction * count) images are drawn (seeded)
// into the test set; the remainder trains. Every subject appears on
// both sides, or the call throws.
SplitPair split_train_test(const ImageDataset& ds, double test_fraction, std::uint64_t seed);

// Synthetic corpus: one deterministic low-frequency template per
// subject plus clamped Gaussian pixel noise. noise_std = 0 reproduces
// the templates exactly.
ImageDataset synth_dataset(const SynthSpec& spec);

// Pixelwise mean over all images, returned as an (h, w) tensor.
Tensor mean_image(const ImageDataset& ds);

// Pack selected images as an (B, 1, h, w) batch tensor.
Tensor pack_batch(const ImageDataset& ds, const std::vector<std::size_t>& indices);

// One-hot access labels for selected images as a (B, num_levels) tensor.
Tensor pack_labels_one_hot(const ImageDataset& ds, const std::vector<std::size_t>& indices);

}  // namespace drpriv
