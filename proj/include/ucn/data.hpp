#ifndef UCN_DATA_HPP
#define UCN_DATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ucn/tensor.hpp"

namespace ucn {

struct Sample {
    Tensor<float> image;  // (1,3,H,W), values in [0,1]
    Tensor<float> mask;   // (1,1,H,W), values exactly 0 or 1
    std::string id;
};

enum class Subset { day, night, all };

Subset parse_subset(const std::string& s);  // "day" | "night" | "all"

struct ManifestEntry {
    std::string id;          // basename without extension
    std::string image_path;
    std::string mask_path;
    bool night = false;
};

// Folder layout: <root>/images/*.{png,jpg,jpeg} with a matching
// <root>/GTmaps/<basename>.png per image. Entries come back sorted by id.
// Night images are those listed in <root>/night_ids.txt when that file
// exists, otherwise those whose id starts with 'n'.
struct DatasetManifest {
    std::string root;
    Subset subset = Subset::all;
    std::vector<ManifestEntry> entries;
};

DatasetManifest load_manifest(const std::string& root, Subset subset);

// Deterministic shuffled split: first floor(ratio*n) shuffled ids train, rest
// test. Same seed, same split.
std::pair<std::vector<std::string>, std::vector<std::string>> split_ids(
    const DatasetManifest& m, double ratio, uint32_t seed);

// Audit file of "id<TAB>train|test" lines, in the given order.
void export_split(const std::string& path, const std::vector<std::string>& train,
                  const std::vector<std::string>& test);

// Decode, resize (image bilinear, mask nearest + 0.5 threshold), normalize.
Sample load_sample(const ManifestEntry& e, int target_h, int target_w);

// Batch index plan for one epoch: a fresh shuffle keyed by (seed, epoch),
// chopped into batch_size chunks with the final partial batch kept.
std::vector<std::vector<size_t>> batch_plan(size_t n, size_t batch_size, uint32_t seed, int epoch);

// Procedural sky/cloud scenes for desk-scale training: soft elliptical cloud
// blobs over a sky gradient, mask = blob field thresholded. Every mask
// contains both classes (degenerate draws are re-rolled). Deterministic per
// (seed, index).
std::vector<Sample> synth_dataset(int n, int h, int w, uint32_t seed);

// Stack per-sample (1,C,H,W) tensors into one (B,C,H,W) batch pair
// (images, masks) for the given indices, in order.
std::pair<Tensor<float>, Tensor<float>> stack_batch(const std::vector<Sample>& samples,
                                                    const std::vector<size_t>& idx);

// Uniform access to training samples, whether held in memory (synthetic,
// tests) or decoded from disk on demand (real folders).
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual size_t size() const = 0;
    virtual Sample get(size_t i) = 0;
};

class VectorSource : public SampleSource {
public:
    explicit VectorSource(std::vector<Sample> samples) : samples_(std::move(samples)) {}
    size_t size() const override { return samples_.size(); }
    Sample get(size_t i) override { return samples_.at(i); }

private:
    std::vector<Sample> samples_;
};

class FolderSource : public SampleSource {
public:
    FolderSource(std::vector<ManifestEntry> entries, int target_h, int target_w)
        : entries_(std::move(entries)), th_(target_h), tw_(target_w) {}
    size_t size() const override { return entries_.size(); }
    Sample get(size_t i) override { return load_sample(entries_.at(i), th_, tw_); }

private:
    std::vector<ManifestEntry> entries_;
    int th_, tw_;
};

std::pair<Tensor<float>, Tensor<float>> stack_batch(SampleSource& source,
                                                    const std::vector<size_t>& idx);

}  // namespace ucn

#endif  // UCN_DATA_HPP
