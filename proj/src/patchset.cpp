#include "crackseg/patchset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace crackseg {
namespace {

auto record_key(const PatchRecord& r) {
  return std::tie(r.split, r.image_id, r.origin.y, r.origin.x, r.patch_size);
}

// Indices of `group` shuffled by a partial Fisher-Yates; first `k` used.
std::vector<PatchRecord> sample_without_replacement(std::vector<PatchRecord> group, std::int64_t k, Rng& rng) {
  const auto n = static_cast<std::int64_t>(group.size());
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(group[static_cast<std::size_t>(i)], group[static_cast<std::size_t>(j)]);
  }
  group.resize(static_cast<std::size_t>(k));
  return group;
}

// Splits `total` into integer parts proportional to `weights` (largest
// remainder, ties to the lower index).
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> parts(weights.size(), 0);
  if (sum <= 0.0) {
    if (!parts.empty()) parts[0] = total;
    return parts;
  }
  std::vector<std::pair<double, std::size_t>> rema;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = double(total) * weights[i] / sum;
    parts[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += parts[i];
    rema.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) parts[rema[i % rema.size()].second] += 1;
  return parts;
}

struct PoolGroups {
  std::vector<PatchRecord> crack[2];
  std::vector<PatchRecord> background[2];
};

PoolGroups group_pool(std::vector<PatchRecord> pool) {
  std::sort(pool.begin(), pool.end(), record_less);
  PoolGroups g;
  for (auto& r : pool) {
    const int s = r.split == Split::train ? 0 : 1;
    (r.label == PatchLabel::crack ? g.crack[s] : g.background[s]).push_back(std::move(r));
  }
  return g;
}

void check_fraction(double f) {
  if (!(f > 0.0 && f <= 1.0)) {
    throw std::invalid_argument("crack fraction " + std::to_string(f) + " outside (0, 1]");
  }
}

std::string default_name(double f) {
  std::ostringstream os;
  os << "ratio-" << std::lround(f * 100.0) << "-" << std::lround((1.0 - f) * 100.0);
  return os.str();
}

}  // namespace

std::string to_string(PatchLabel label) { return label == PatchLabel::crack ? "crack" : "background"; }
std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

PatchLabel parse_label(const std::string& s) {
  if (s == "crack") return PatchLabel::crack;
  if (s == "background") return PatchLabel::background;
  throw std::invalid_argument("unknown patch label '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

bool record_less(const PatchRecord& a, const PatchRecord& b) { return record_key(a) < record_key(b); }

LabelCounts count_labels(const std::vector<PatchRecord>& records) {
  LabelCounts c;
  for (const auto& r : records) (r.label == PatchLabel::crack ? c.crack : c.background) += 1;
  return c;
}

DatasetRatio parse_ratio(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("ratio '" + text + "' must look like 70/30");
  double a = 0, b = 0;
  try {
    std::size_t used_a = 0, used_b = 0;
    a = std::stod(text.substr(0, slash), &used_a);
    b = std::stod(text.substr(slash + 1), &used_b);
    if (used_a != slash || used_b != text.size() - slash - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("ratio '" + text + "' must look like 70/30");
  }
  if (!(a > 0.0) || b < 0.0) throw std::invalid_argument("ratio '" + text + "' needs a positive crack share");
  return {a / (a + b), b / (a + b)};
}

LabeledPatches label_patches(const PatchGrid& grid, const BinaryMask& gt, int min_crack_pixels,
                             const std::string& image_id, Split split) {
  if (grid.width() != gt.width() || grid.height() != gt.height()) {
    throw ShapeError("label_patches: grid covers " + std::to_string(grid.width()) + "x" +
                     std::to_string(grid.height()) + " but mask is " + std::to_string(gt.width()) + "x" +
                     std::to_string(gt.height()));
  }
  if (min_crack_pixels < 1) throw std::invalid_argument("label_patches: min_crack_pixels must be >= 1");
  LabeledPatches out;
  for (const auto& o : grid.origins) {
    const auto n = gt.values().block(o.y, o.x, grid.patch_size, grid.patch_size).cast<std::int64_t>().sum();
    const auto label = n >= min_crack_pixels ? PatchLabel::crack : PatchLabel::background;
    out.records.push_back({image_id, o, grid.patch_size, label, split});
  }
  out.counts = count_labels(out.records);
  return out;
}

std::int64_t background_count_for(std::int64_t crack_count, double crack_fraction) {
  check_fraction(crack_fraction);
  return std::llround(double(crack_count) * (1.0 - crack_fraction) / crack_fraction);
}

PatchManifest compose_ratio_dataset(const std::vector<PatchRecord>& pool, std::int64_t crack_count,
                                    double crack_fraction, std::uint64_t seed, std::string name) {
  check_fraction(crack_fraction);
  if (crack_count <= 0) throw std::invalid_argument("compose_ratio_dataset: crack_count must be positive");
  const PoolGroups g = group_pool(pool);
  const std::int64_t avail_crack = std::int64_t(g.crack[0].size() + g.crack[1].size());
  if (avail_crack < crack_count) {
    throw std::invalid_argument("compose_ratio_dataset: pool holds " + std::to_string(avail_crack) +
                                " crack patches, " + std::to_string(crack_count) + " requested");
  }
  const auto crack_split =
      apportion(crack_count, {double(g.crack[0].size()), double(g.crack[1].size())});
  const std::int64_t bg_total = background_count_for(crack_count, crack_fraction);
  const auto bg_split = apportion(bg_total, {double(crack_split[0]), double(crack_split[1])});
  for (int s = 0; s < 2; ++s) {
    if (std::int64_t(g.background[s].size()) < bg_split[static_cast<std::size_t>(s)]) {
      throw std::invalid_argument("compose_ratio_dataset: pool holds " + std::to_string(g.background[s].size()) +
                                  " " + to_string(Split(s)) + " background patches, " +
                                  std::to_string(bg_split[static_cast<std::size_t>(s)]) + " needed");
    }
  }

  Rng rng(seed);
  PatchManifest m;
  for (int s = 0; s < 2; ++s) {
    for (auto& r : sample_without_replacement(g.crack[s], crack_split[static_cast<std::size_t>(s)], rng)) {
      m.records.push_back(std::move(r));
    }
  }
  for (int s = 0; s < 2; ++s) {
    for (auto& r : sample_without_replacement(g.background[s], bg_split[static_cast<std::size_t>(s)], rng)) {
      m.records.push_back(std::move(r));
    }
  }
  std::sort(m.records.begin(), m.records.end(), record_less);
  m.name = name.empty() ? default_name(crack_fraction) : std::move(name);
  m.ratio = {crack_fraction, 1.0 - crack_fraction};
  m.seed = seed;
  return m;
}

PatchManifest compose_full_dataset(const std::vector<PatchRecord>& pool, std::string name) {
  PatchManifest m;
  m.records = pool;
  std::sort(m.records.begin(), m.records.end(), record_less);
  const auto c = m.counts();
  const double f = c.crack_fraction();
  m.ratio = {f, c.total() ? 1.0 - f : 0.0};
  m.name = name.empty() ? "full" : std::move(name);
  return m;
}

PatchManifest extend_dataset(const PatchManifest& base, const std::vector<PatchRecord>& pool,
                             double new_crack_fraction, std::uint64_t seed, std::string name) {
  check_fraction(new_crack_fraction);
  if (new_crack_fraction > base.ratio.crack_fraction + 1e-12) {
    throw std::invalid_argument("extend_dataset: new crack fraction " + std::to_string(new_crack_fraction) +
                                " is larger than the base fraction " + std::to_string(base.ratio.crack_fraction));
  }
  PatchManifest m;
  m.records = base.records;
  m.ratio = {new_crack_fraction, 1.0 - new_crack_fraction};
  m.seed = seed;
  m.parent = base.name;
  m.name = name.empty() ? base.name + "+" + default_name(new_crack_fraction) : std::move(name);

  std::int64_t crack[2] = {0, 0}, bg[2] = {0, 0};
  for (const auto& r : base.records) {
    const int s = r.split == Split::train ? 0 : 1;
    (r.label == PatchLabel::crack ? crack[s] : bg[s]) += 1;
  }
  const std::int64_t target = background_count_for(crack[0] + crack[1], new_crack_fraction);
  const std::int64_t missing = target - (bg[0] + bg[1]);
  if (missing <= 0) return m;

  const auto target_split = apportion(target, {double(crack[0]), double(crack[1])});
  std::int64_t add[2] = {std::max<std::int64_t>(0, target_split[0] - bg[0]),
                         std::max<std::int64_t>(0, target_split[1] - bg[1])};
  // Clamping can leave the sum off by the excess of a saturated split.
  while (add[0] + add[1] > missing) (add[0] >= add[1] ? add[0] : add[1]) -= 1;
  while (add[0] + add[1] < missing) (crack[0] >= crack[1] ? add[0] : add[1]) += 1;

  std::set<std::tuple<Split, std::string, int, int, int>> taken;
  for (const auto& r : base.records) taken.insert(record_key(r));
  PoolGroups g = group_pool(pool);
  Rng rng(seed);
  for (int s = 0; s < 2; ++s) {
    std::vector<PatchRecord> fresh;
    for (auto& r : g.background[s]) {
      if (!taken.count(record_key(r))) fresh.push_back(r);
    }
    if (std::int64_t(fresh.size()) < add[s]) {
      throw std::invalid_argument("extend_dataset: pool exhausted, " + std::to_string(fresh.size()) + " unused " +
                                  to_string(Split(s)) + " background patches, " + std::to_string(add[s]) +
                                  " needed");
    }
    for (auto& r : sample_without_replacement(std::move(fresh), add[s], rng)) m.records.push_back(std::move(r));
  }
  std::sort(m.records.begin(), m.records.end(), record_less);
  return m;
}

PixelPos choose_crop_offset(const MaskPlane& mask, int crop_w, int crop_h, Rng& rng, bool require_crack) {
  const int w = static_cast<int>(mask.cols()), h = static_cast<int>(mask.rows());
  if (crop_w <= 0 || crop_h <= 0 || crop_w > w || crop_h > h) {
    throw std::invalid_argument("crop " + std::to_string(crop_w) + "x" + std::to_string(crop_h) +
                                " does not fit in " + std::to_string(w) + "x" + std::to_string(h));
  }
  const int nx = w - crop_w + 1, ny = h - crop_h + 1;
  const bool has_crack = (mask != 0).any();
  if (!require_crack || !has_crack) {
    const auto k = uniform_below(rng, static_cast<std::uint64_t>(nx) * ny);
    return {static_cast<int>(k % nx), static_cast<int>(k / nx)};
  }
  // Summed-area table with a zero border row/column.
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sat =
      Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      sat(y + 1, x + 1) = (mask(y, x) != 0) + sat(y, x + 1) + sat(y + 1, x) - sat(y, x);
    }
  }
  auto crack_in = [&](int x, int y) {
    return sat(y + crop_h, x + crop_w) - sat(y, x + crop_w) - sat(y + crop_h, x) + sat(y, x);
  };
  std::uint64_t valid = 0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) valid += crack_in(x, y) > 0;
  auto k = uniform_below(rng, valid);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      if (crack_in(x, y) > 0 && k-- == 0) return {x, y};
    }
  }
  return {0, 0};  // unreachable: valid > 0 whenever the mask has a crack pixel
}

std::pair<RasterImage, BinaryMask> reduce_patch(const RasterImage& patch, const BinaryMask& mask, int target_size,
                                                std::uint64_t seed) {
  if (patch.width() != mask.width() || patch.height() != mask.height()) {
    throw ShapeError("reduce_patch: patch and mask differ in shape");
  }
  if (target_size <= 0 || target_size > patch.width() || target_size > patch.height()) {
    throw std::invalid_argument("reduce_patch: target size " + std::to_string(target_size) +
                                " exceeds patch size");
  }
  Rng rng(seed);
  const PixelPos o = choose_crop_offset(mask.values(), target_size, target_size, rng, true);
  std::vector<Plane> planes;
  for (const auto& p : patch.planes()) planes.emplace_back(p.block(o.y, o.x, target_size, target_size));
  return {RasterImage(std::move(planes)),
          BinaryMask(MaskPlane(mask.values().block(o.y, o.x, target_size, target_size)))};
}

std::string manifest_to_jsonl(const PatchManifest& m) {
  using nlohmann::json;
  std::string out;
  json header = {{"name", m.name},
                 {"ratio", {m.ratio.crack_fraction, m.ratio.background_fraction}},
                 {"seed", m.seed},
                 {"parent", m.parent ? json(*m.parent) : json(nullptr)}};
  out += header.dump() + "\n";
  for (const auto& r : m.records) {
    json j = {{"image_id", r.image_id}, {"x", r.origin.x},         {"y", r.origin.y},
              {"size", r.patch_size},   {"label", to_string(r.label)}, {"split", to_string(r.split)}};
    out += j.dump() + "\n";
  }
  return out;
}

PatchManifest manifest_from_jsonl(const std::string& text) {
  using nlohmann::json;
  std::istringstream in(text);
  std::string line;
  PatchManifest m;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_header) {
        m.name = j.at("name").get<std::string>();
        m.ratio = {j.at("ratio").at(0).get<double>(), j.at("ratio").at(1).get<double>()};
        m.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("parent") && !j["parent"].is_null()) m.parent = j["parent"].get<std::string>();
        have_header = true;
        continue;
      }
      PatchRecord r;
      r.image_id = j.at("image_id").get<std::string>();
      r.origin = {j.at("x").get<int>(), j.at("y").get<int>()};
      r.patch_size = j.at("size").get<int>();
      r.label = parse_label(j.at("label").get<std::string>());
      r.split = parse_split(j.at("split").get<std::string>());
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw std::invalid_argument("manifest: missing header line");
  return m;
}

}  // namespace crackseg
