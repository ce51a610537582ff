#pragma once

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "drpriv/dataset.hpp"
#include "drpriv/nn.hpp"
#include "drpriv/rng.hpp"

namespace testutil {

// Fresh scratch directory under the system temp root, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("drpriv_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

// Hand-built corpus with seeded uniform pixels: n images of h x w,
// subjects cycling over 2*m ids, labels = subject % m.
inline drpriv::ImageDataset random_dataset(std::size_t n, std::size_t h, std::size_t w, int m,
                                           std::uint64_t seed) {
    drpriv::ImageDataset ds;
    ds.name = "random";
    ds.height = h;
    ds.width = w;
    ds.num_levels = m;
    drpriv::RngStream rng(seed);
    const int subjects = 2 * m;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> img(h * w);
        for (double& v : img) v = rng.uniform();
        ds.images.push_back(std::move(img));
        ds.subject_ids.push_back(static_cast<int>(i) % subjects);
        ds.access_labels.push_back((static_cast<int>(i) % subjects) % m);
    }
    return ds;
}

inline bool tensors_equal(const drpriv::Tensor& a, const drpriv::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return a.size() == 0 ||
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

inline bool params_equal(const drpriv::ParamSet& a, const drpriv::ParamSet& b) {
    if (a.tensors.size() != b.tensors.size()) return false;
    for (const auto& [name, t] : a.tensors) {
        auto it = b.tensors.find(name);
        if (it == b.tensors.end() || !tensors_equal(t, it->second)) return false;
    }
    return true;
}

}  // namespace testutil
