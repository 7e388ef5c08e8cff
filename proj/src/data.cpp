#include "ucn/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ucn/image_io.hpp"
#include "ucn/layers.hpp"

namespace fs = std::filesystem;

namespace ucn {

Subset parse_subset(const std::string& s) {
    if (s == "day") return Subset::day;
    if (s == "night") return Subset::night;
    if (s == "all") return Subset::all;
    throw ValueError("subset must be day, night, or all, got '" + s + "'");
}

namespace {

bool has_image_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ".png" || e == ".jpg" || e == ".jpeg";
}

std::set<std::string> read_id_file(const fs::path& p) {
    std::set<std::string> ids;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' '))
            line.pop_back();
        if (!line.empty()) ids.insert(line);
    }
    return ids;
}

}  // namespace

DatasetManifest load_manifest(const std::string& root, Subset subset) {
    const fs::path images = fs::path(root) / "images";
    const fs::path gtmaps = fs::path(root) / "GTmaps";
    if (!fs::is_directory(images) || !fs::is_directory(gtmaps))
        throw IoError("dataset root must contain images/ and GTmaps/: " + root);

    const fs::path night_file = fs::path(root) / "night_ids.txt";
    const bool have_night_file = fs::is_regular_file(night_file);
    const std::set<std::string> night_ids =
        have_night_file ? read_id_file(night_file) : std::set<std::string>{};

    DatasetManifest m;
    m.root = root;
    m.subset = subset;
    for (const auto& de : fs::directory_iterator(images)) {
        if (!de.is_regular_file() || !has_image_ext(de.path())) continue;
        ManifestEntry e;
        e.id = de.path().stem().string();
        e.image_path = de.path().string();
        const fs::path mask = gtmaps / (e.id + ".png");
        if (!fs::is_regular_file(mask))
            throw IoError("image without a mask: " + e.image_path + " (expected " + mask.string() +
                          ")");
        e.mask_path = mask.string();
        e.night = have_night_file ? night_ids.count(e.id) > 0 : (!e.id.empty() && e.id[0] == 'n');
        if (subset == Subset::day && e.night) continue;
        if (subset == Subset::night && !e.night) continue;
        m.entries.push_back(std::move(e));
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
    if (m.entries.empty()) throw IoError("no samples found under " + root + " for requested subset");
    return m;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_ids(const DatasetManifest& m,
                                                                        double ratio,
                                                                        uint32_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ValueError("split ratio must be in (0,1), got " + std::to_string(ratio));
    std::vector<std::string> ids;
    ids.reserve(m.entries.size());
    for (const ManifestEntry& e : m.entries) ids.push_back(e.id);

    // Hand-rolled Fisher-Yates on raw mt19937 draws; std::shuffle output is
    // not pinned down by the standard.
    std::mt19937 gen(seed);
    for (size_t i = ids.size() - 1; i > 0; --i) {
        size_t j = gen() % (i + 1);
        std::swap(ids[i], ids[j]);
    }
    const size_t ntrain = static_cast<size_t>(ratio * static_cast<double>(ids.size()));
    std::vector<std::string> train(ids.begin(), ids.begin() + ntrain);
    std::vector<std::string> test(ids.begin() + ntrain, ids.end());
    return {std::move(train), std::move(test)};
}

void export_split(const std::string& path, const std::vector<std::string>& train,
                  const std::vector<std::string>& test) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write split file: " + path);
    for (const std::string& id : train) out << id << "\ttrain\n";
    for (const std::string& id : test) out << id << "\ttest\n";
}

Sample load_sample(const ManifestEntry& e, int target_h, int target_w) {
    Sample s;
    s.id = e.id;
    std::vector<float> img = load_image_rgb(e.image_path, target_h, target_w);
    std::vector<float> msk = load_mask_binary(e.mask_path, target_h, target_w);
    s.image = Tensor<float>::from_data({1, 3, target_h, target_w}, std::move(img));
    s.mask = Tensor<float>::from_data({1, 1, target_h, target_w}, std::move(msk));
    return s;
}

std::vector<std::vector<size_t>> batch_plan(size_t n, size_t batch_size, uint32_t seed, int epoch) {
    if (batch_size < 1) throw ValueError("batch_size must be >= 1");
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937 gen(seed ^ (0x9e3779b9u * static_cast<uint32_t>(epoch + 1)));
    for (size_t i = n; i > 1; --i) {
        size_t j = gen() % i;
        std::swap(idx[i - 1], idx[j]);
    }
    std::vector<std::vector<size_t>> plan;
    for (size_t start = 0; start < n; start += batch_size) {
        const size_t end = std::min(n, start + batch_size);
        plan.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    return plan;
}

std::vector<Sample> synth_dataset(int n, int h, int w, uint32_t seed) {
    if (n < 1) throw ValueError("synth_dataset: n must be >= 1");
    if (h % 16 != 0 || w % 16 != 0)
        throw ValueError("synth_dataset: size must be divisible by 16, got " + std::to_string(h) +
                         "x" + std::to_string(w));

    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::mt19937 gen(seed * 1000003u + static_cast<uint32_t>(i));
        std::vector<float> cloud(static_cast<size_t>(h) * w);
        std::vector<float> mask(static_cast<size_t>(h) * w);

        // Re-roll until the thresholded blob field has both classes.
        for (int attempt = 0;; ++attempt) {
            std::fill(cloud.begin(), cloud.end(), 0.0f);
            const int nblobs = 3 + static_cast<int>(init::unit(gen) * 4.0);  // 3..6
            for (int bidx = 0; bidx < nblobs; ++bidx) {
                const double cx = init::unit(gen) * w;
                const double cy = init::unit(gen) * h;
                const double rx = (0.21 + 0.36 * init::unit(gen)) * w;
                const double ry = (0.21 + 0.36 * init::unit(gen)) * h;
                const double ang = init::unit(gen) * 3.14159265358979323846;
                const double ca = std::cos(ang), sa = std::sin(ang);
                for (int y = 0; y < h; ++y) {
                    for (int x = 0; x < w; ++x) {
                        const double dx = x - cx, dy = y - cy;
                        const double u = (dx * ca + dy * sa) / rx;
                        const double v = (-dx * sa + dy * ca) / ry;
                        const double d2 = u * u + v * v;
                        const float val = static_cast<float>(std::exp(-2.5 * d2));
                        float& c = cloud[static_cast<size_t>(y) * w + x];
                        c = std::max(c, val);
                    }
                }
            }
            size_t onc = 0;
            for (size_t j = 0; j < mask.size(); ++j) {
                mask[j] = cloud[j] >= 0.5f ? 1.0f : 0.0f;
                onc += mask[j] != 0.0f;
            }
            if (onc > 0 && onc < mask.size()) break;
            if (attempt > 64)
                throw ValueError("synth_dataset: degenerate mask persisted after 64 re-rolls");
        }

        // Sky gradient parameters and per-image cloud tint.
        const double top_r = 0.10 + 0.15 * init::unit(gen);
        const double top_g = 0.30 + 0.20 * init::unit(gen);
        const double top_b = 0.55 + 0.30 * init::unit(gen);
        const double bot_r = top_r + 0.15 + 0.10 * init::unit(gen);
        const double bot_g = top_g + 0.10 + 0.10 * init::unit(gen);
        const double bot_b = top_b + 0.05 * init::unit(gen);
        const double cloud_lum = 0.80 + 0.18 * init::unit(gen);

        std::vector<float> img(static_cast<size_t>(3) * h * w);
        for (int y = 0; y < h; ++y) {
            const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
            const double sky[3] = {top_r + (bot_r - top_r) * t, top_g + (bot_g - top_g) * t,
                                   top_b + (bot_b - top_b) * t};
            for (int x = 0; x < w; ++x) {
                // Steep blend ramp around the 0.5 mask threshold: only a thin
                // shell of boundary pixels mixes sky and cloud colors, so the
                // rendered class boundary stays close to the label boundary.
                const double a0 = cloud[static_cast<size_t>(y) * w + x];
                double a = (a0 - 0.5) / 0.2 + 0.5;
                a = a < 0.0 ? 0.0 : (a > 1.0 ? 1.0 : a);
                for (int c = 0; c < 3; ++c) {
                    const double noise = (init::unit(gen) - 0.5) * 0.02;
                    double v = sky[c] * (1.0 - a) + cloud_lum * a + noise;
                    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                    img[(static_cast<size_t>(c) * h + y) * w + x] = static_cast<float>(v);
                }
            }
        }

        Sample s;
        s.id = "synth" + std::to_string(i);
        s.image = Tensor<float>::from_data({1, 3, h, w}, std::move(img));
        s.mask = Tensor<float>::from_data({1, 1, h, w}, std::move(mask));
        out.push_back(std::move(s));
    }
    return out;
}

std::pair<Tensor<float>, Tensor<float>> stack_batch(const std::vector<Sample>& samples,
                                                    const std::vector<size_t>& idx) {
    if (idx.empty()) throw ValueError("stack_batch: empty index list");
    const Shape is = samples[idx[0]].image.shape();
    const Shape ms = samples[idx[0]].mask.shape();
    const int64_t B = static_cast<int64_t>(idx.size());
    Tensor<float> images = Tensor<float>::zeros({B, is.c, is.h, is.w});
    Tensor<float> masks = Tensor<float>::zeros({B, ms.c, ms.h, ms.w});
    for (int64_t b = 0; b < B; ++b) {
        const Sample& s = samples[idx[static_cast<size_t>(b)]];
        if (!(s.image.shape() == is) || !(s.mask.shape() == ms))
            throw ShapeError("stack_batch: sample " + s.id + " has shape " + s.image.shape().str() +
                             ", batch expects " + is.str());
        std::copy(s.image.data().begin(), s.image.data().end(),
                  images.data().begin() + b * is.numel());
        std::copy(s.mask.data().begin(), s.mask.data().end(),
                  masks.data().begin() + b * ms.numel());
    }
    return {std::move(images), std::move(masks)};
}

std::pair<Tensor<float>, Tensor<float>> stack_batch(SampleSource& source,
                                                    const std::vector<size_t>& idx) {
    std::vector<Sample> batch;
    batch.reserve(idx.size());
    for (size_t i : idx) batch.push_back(source.get(i));
    std::vector<size_t> local(idx.size());
    for (size_t i = 0; i < local.size(); ++i) local[i] = i;
    return stack_batch(batch, local);
}

}  // namespace ucn
