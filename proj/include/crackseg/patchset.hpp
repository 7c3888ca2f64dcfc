#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crackseg/raster.hpp"
#include "crackseg/rng.hpp"

namespace crackseg {

enum class PatchLabel { crack, background };
enum class Split { train, test };

std::string to_string(PatchLabel label);
std::string to_string(Split split);
PatchLabel parse_label(const std::string& s);
Split parse_split(const std::string& s);

struct PatchRecord {
  std::string image_id;
  PixelPos origin;
  int patch_size = 0;
  PatchLabel label = PatchLabel::background;
  Split split = Split::train;

  friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

/// Canonical order: split, image id, y, x, size.
bool record_less(const PatchRecord& a, const PatchRecord& b);

struct LabelCounts {
  std::int64_t crack = 0;
  std::int64_t background = 0;
  std::int64_t total() const { return crack + background; }
  double crack_fraction() const { return total() ? double(crack) / double(total()) : 0.0; }
};

LabelCounts count_labels(const std::vector<PatchRecord>& records);

struct DatasetRatio {
  double crack_fraction = 0.7;
  double background_fraction = 0.3;
};

/// Parses "70/30" style ratios (any positive pair, normalised).
DatasetRatio parse_ratio(const std::string& text);

struct PatchManifest {
  std::string name;
  std::vector<PatchRecord> records;
  DatasetRatio ratio;
  std::uint64_t seed = 0;
  std::optional<std::string> parent;

  LabelCounts counts() const { return count_labels(records); }
};

struct LabeledPatches {
  std::vector<PatchRecord> records;
  LabelCounts counts;
};

/// A patch is a crack patch when its mask region holds at least
/// `min_crack_pixels` crack pixels.
LabeledPatches label_patches(const PatchGrid& grid, const BinaryMask& gt, int min_crack_pixels = 1,
                             const std::string& image_id = {}, Split split = Split::train);

/// round(crack_count * (1 - f) / f)
std::int64_t background_count_for(std::int64_t crack_count, double crack_fraction);

/// Samples `crack_count` crack patches and the matching number of
/// background patches from `pool` without replacement. Both the train and
/// the test subsets individually follow the requested ratio.
PatchManifest compose_ratio_dataset(const std::vector<PatchRecord>& pool, std::int64_t crack_count,
                                    double crack_fraction, std::uint64_t seed, std::string name = {});

/// Every patch of the pool, ratio taken from the counts.
PatchManifest compose_full_dataset(const std::vector<PatchRecord>& pool, std::string name = {});

/// Adds fresh background patches to `base` until the crack fraction drops
/// to `new_crack_fraction`. Base records are kept verbatim.
PatchManifest extend_dataset(const PatchManifest& base, const std::vector<PatchRecord>& pool,
                             double new_crack_fraction, std::uint64_t seed, std::string name = {});

/// Picks a crop origin uniformly among all placements of a crop_w x crop_h
/// window; with `require_crack` (and a non-empty mask) only placements
/// holding at least one crack pixel qualify.
PixelPos choose_crop_offset(const MaskPlane& mask, int crop_w, int crop_h, Rng& rng, bool require_crack);

/// Crops `patch`/`mask` to target_size x target_size keeping a crack pixel
/// in view when the mask has one.
std::pair<RasterImage, BinaryMask> reduce_patch(const RasterImage& patch, const BinaryMask& mask, int target_size,
                                                std::uint64_t seed);

// JSON-lines manifest: a header object followed by one record per line.
std::string manifest_to_jsonl(const PatchManifest& manifest);
PatchManifest manifest_from_jsonl(const std::string& text);

}  // namespace crackseg
