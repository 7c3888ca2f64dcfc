// crackseg command line: dataset building, annotation, evaluation, losses
// and the annotation server.

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

// Eigen before httplib: <resolv.h> defines a `_res` macro that breaks
// Eigen's product kernels.
#include "crackseg/annotsvc.hpp"
#include "crackseg/error.hpp"
#include "crackseg/evalmetrics.hpp"
#include "crackseg/geodesic.hpp"
#include "crackseg/patchset.hpp"
#include "crackseg/png_io.hpp"
#include "crackseg/raster.hpp"
#include "crackseg/trainmath.hpp"
#include "crackseg/widthseg.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace crackseg;

namespace {

// Bad flags or arguments that contradict the input (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
  return code;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

// JSON given inline or as @file.
std::string json_arg(const std::string& v) { return !v.empty() && v[0] == '@' ? read_text(v.substr(1)) : v; }

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("crackseg");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("CRACKSEG_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(lvl));
}

// PNG files of a directory by stem.
std::map<std::string, fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png") out[e.path().stem().string()] = e.path();
  }
  return out;
}

struct PairedFile {
  std::string id;
  fs::path a, b;
};

// Files paired by stem; anything without a partner is an error.
std::vector<PairedFile> pair_dirs(const fs::path& da, const fs::path& db, const char* what_a, const char* what_b) {
  const auto fa = png_files(da), fb = png_files(db);
  std::vector<std::string> unpaired;
  for (const auto& [k, p] : fa)
    if (!fb.count(k)) unpaired.push_back(std::string(what_a) + " " + p.filename().string());
  for (const auto& [k, p] : fb)
    if (!fa.count(k)) unpaired.push_back(std::string(what_b) + " " + p.filename().string());
  if (!unpaired.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& u : unpaired) msg += " " + u;
    throw std::runtime_error(msg);
  }
  std::vector<PairedFile> out;
  for (const auto& [k, p] : fa) out.push_back({k, p, fb.at(k)});
  return out;
}

struct Source {
  std::string id;
  fs::path image, mask;
  Split split;
};

// images/{train,test} + masks/{train,test} when present, else one train split.
std::vector<Source> collect_sources(const fs::path& images, const fs::path& masks) {
  std::vector<Source> out;
  const bool split_dirs = fs::is_directory(images / "train") || fs::is_directory(images / "test");
  if (!split_dirs) {
    for (auto& p : pair_dirs(images, masks, "image", "mask")) out.push_back({p.id, p.a, p.b, Split::train});
  } else {
    for (Split s : {Split::train, Split::test}) {
      const std::string sub = to_string(s);
      if (!fs::is_directory(images / sub)) continue;
      for (auto& p : pair_dirs(images / sub, masks / sub, "image", "mask")) out.push_back({p.id, p.a, p.b, s});
    }
  }
  if (out.empty()) throw std::runtime_error("no image/mask pairs under " + images.string());
  return out;
}

std::vector<PatchRecord> build_pool(const std::vector<Source>& sources, int patch_size, int min_crack_pixels) {
  std::vector<PatchRecord> pool;
  for (const auto& s : sources) {
    const BinaryMask gt = load_mask(s.mask);
    PatchGrid grid;
    try {
      grid = split_into_patches(gt.width(), gt.height(), patch_size);
    } catch (const std::invalid_argument& e) {
      throw UsageError(s.mask.filename().string() + ": " + e.what());
    }
    auto l = label_patches(grid, gt, min_crack_pixels, s.id, s.split);
    pool.insert(pool.end(), l.records.begin(), l.records.end());
  }
  return pool;
}

std::string counts_line(const char* what, const LabelCounts& c) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << what << ": " << c.total() << " patches, crack " << c.crack << " (" << 100.0 * c.crack_fraction() << "%), background "
    << c.background << " (" << (c.total() ? 100.0 * c.background / double(c.total()) : 0.0) << "%)";
  return o.str();
}

void materialize(const PatchManifest& m, const std::vector<Source>& sources, const fs::path& dir) {
  std::map<std::string, const Source*> by_id;
  for (const auto& s : sources) by_id[s.id] = &s;
  std::map<std::string, std::vector<const PatchRecord*>> per_image;
  for (const auto& r : m.records) per_image[r.image_id].push_back(&r);
  for (const auto& [id, recs] : per_image) {
    if (!by_id.count(id)) throw std::runtime_error("manifest references unknown image " + id);
    const RasterImage img = load_image(by_id[id]->image);
    const BinaryMask gt = load_mask(by_id[id]->mask);
    for (const PatchRecord* r : recs) {
      const fs::path base = dir / to_string(r->split) / to_string(r->label);
      const std::string name = id + "_" + std::to_string(r->origin.x) + "_" + std::to_string(r->origin.y) + ".png";
      fs::create_directories(base / "images");
      fs::create_directories(base / "masks");
      save_image(extract_patch(img, r->origin, r->patch_size), base / "images" / name);
      save_mask(extract_patch(gt, r->origin, r->patch_size), base / "masks" / name);
    }
  }
}

PixelPos parse_endpoint(const std::vector<int>& v, std::size_t i) { return {v[2 * i], v[2 * i + 1]}; }

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Crack segmentation toolkit"};
  app.require_subcommand(1);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Build and extend patch datasets");
  dataset->require_subcommand(1);

  auto* build = dataset->add_subcommand("build", "Split images into patches and compose a ratio dataset");
  std::string b_images, b_masks, b_ratio = "70/30", b_out, b_mat, b_name;
  int b_patch = 512, b_min_px = 1;
  std::int64_t b_crack = 1400;
  std::uint64_t b_seed = 0;
  build->add_option("--images", b_images, "Image directory (optionally with train/ and test/)")->required();
  build->add_option("--masks", b_masks, "Mask directory, files paired by name")->required();
  build->add_option("--patch-size", b_patch, "Patch side in pixels")->check(CLI::PositiveNumber);
  build->add_option("--ratio", b_ratio, "crack/background ratio such as 70/30, or full");
  build->add_option("--crack-count", b_crack, "Crack patches to sample")->check(CLI::PositiveNumber);
  build->add_option("--seed", b_seed, "Sampling seed");
  build->add_option("--min-crack-pixels", b_min_px, "Crack pixels that make a crack patch")->check(CLI::PositiveNumber);
  build->add_option("--name", b_name, "Manifest name");
  build->add_option("--out", b_out, "Manifest (JSON lines)")->required();
  build->add_option("--materialize", b_mat, "Write patch PNGs under this directory");

  auto* extend = dataset->add_subcommand("extend", "Add background patches to an existing manifest");
  std::string e_base, e_ratio, e_images, e_masks, e_out, e_mat, e_name;
  std::uint64_t e_seed = 0;
  int e_min_px = 1;
  extend->add_option("--base", e_base, "Base manifest")->required();
  extend->add_option("--ratio", e_ratio, "New crack/background ratio, e.g. 30/70")->required();
  extend->add_option("--seed", e_seed, "Sampling seed");
  extend->add_option("--images", e_images, "Image directory of the base dataset")->required();
  extend->add_option("--masks", e_masks, "Mask directory of the base dataset")->required();
  extend->add_option("--min-crack-pixels", e_min_px, "Crack pixels that make a crack patch")->check(CLI::PositiveNumber);
  extend->add_option("--name", e_name, "Manifest name");
  extend->add_option("--out", e_out, "Manifest (JSON lines)")->required();
  extend->add_option("--materialize", e_mat, "Write patch PNGs under this directory");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Track a crack between two endpoints and segment it");
  std::string a_image, a_out, a_widths, a_track, a_params, a_wparams;
  std::vector<int> a_endpoints;
  annotate->add_option("--image", a_image, "Input PNG")->required()->check(CLI::ExistingFile);
  annotate->add_option("--endpoints", a_endpoints, "x1,y1,x2,y2")->required()->delimiter(',')->expected(4);
  annotate->add_option("--out", a_out, "Output mask PNG")->required();
  annotate->add_option("--widths", a_widths, "Width profile JSON (default: <out>.widths.json)");
  annotate->add_option("--track", a_track, "Also write the track JSON here");
  annotate->add_option("--params", a_params, "Metric parameters as JSON or @file");
  annotate->add_option("--width-params", a_wparams, "Width parameters as JSON or @file");

  // eval
  auto* eval = app.add_subcommand("eval", "Precision, recall and F1 of prediction maps");
  std::string v_pred, v_gt, v_out;
  double v_tol = 0.0, v_thr = 0.5;
  eval->add_option("--pred", v_pred, "Prediction maps (PNG)")->required();
  eval->add_option("--gt", v_gt, "Ground-truth masks (PNG)")->required();
  eval->add_option("--tolerance", v_tol, "Tolerance radius in pixels")->check(CLI::IsMember({0.0, 2.0, 5.0}));
  eval->add_option("--threshold", v_thr, "Binarisation threshold")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--out", v_out, "Report JSON");

  // loss eval
  auto* loss = app.add_subcommand("loss", "Loss functions");
  loss->require_subcommand(1);
  auto* loss_eval = loss->add_subcommand("eval", "Evaluate the losses on one mask/prediction pair");
  std::string l_gt, l_pred, l_out;
  bool l_inv = false;
  std::vector<double> l_tversky;
  double l_eps = 1.0;
  loss_eval->add_option("--gt", l_gt, "Ground-truth mask PNG")->required()->check(CLI::ExistingFile);
  loss_eval->add_option("--pred", l_pred, "Prediction map PNG")->required()->check(CLI::ExistingFile);
  loss_eval->add_flag("--inversion", l_inv, "Include the loss with inversion");
  loss_eval->add_option("--tversky", l_tversky, "Tversky weights alpha,beta")->delimiter(',')->expected(2);
  loss_eval->add_option("--epsilon", l_eps, "Dice smoothing term")->check(CLI::PositiveNumber);
  loss_eval->add_option("--out", l_out, "Also write the JSON here");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
  std::string s_listen = "127.0.0.1:8080", s_data = "crackseg-data", s_params, s_wparams, s_static;
  std::size_t s_budget_mb = 1024, s_upload_mb = 64;
  int s_working = 0;
  serve->add_option("--listen", s_listen, "host:port")->envname("CRACKSEG_LISTEN");
  serve->add_option("--data-dir", s_data, "Persistent data directory")->envname("CRACKSEG_DATA_DIR");
  serve->add_option("--memory-budget-mb", s_budget_mb, "Orientation score cache budget")->envname("CRACKSEG_MEMORY_BUDGET_MB");
  serve->add_option("--max-upload-mb", s_upload_mb, "Largest accepted upload")->envname("CRACKSEG_MAX_UPLOAD_MB");
  serve->add_option("--working-size", s_working, "Track on a copy with this longest side (0 = full size)")
      ->envname("CRACKSEG_WORKING_SIZE");
  serve->add_option("--params", s_params, "Default metric parameters, JSON or @file")->envname("CRACKSEG_TRACK_PARAMS");
  serve->add_option("--width-params", s_wparams, "Default width parameters, JSON or @file");
  serve->add_option("--static", s_static, "Directory served under /ui");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*build) {
      if (b_patch < 1) throw UsageError("--patch-size must be positive");
      DatasetRatio r;
      if (b_ratio != "full") {
        try {
          r = parse_ratio(b_ratio);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      const auto sources = collect_sources(b_images, b_masks);
      const auto pool = build_pool(sources, b_patch, b_min_px);
      std::cout << counts_line("pool", count_labels(pool)) << "\n";
      const PatchManifest m = b_ratio == "full" ? compose_full_dataset(pool, b_name)
                                                : compose_ratio_dataset(pool, b_crack, r.crack_fraction, b_seed, b_name);
      write_text(b_out, manifest_to_jsonl(m));
      if (!b_mat.empty()) materialize(m, sources, b_mat);
      std::cout << counts_line("manifest", m.counts()) << "\n";
      return 0;
    }
    if (*extend) {
      const PatchManifest base = manifest_from_jsonl(read_text(e_base));
      if (base.records.empty()) throw std::runtime_error("base manifest has no records");
      DatasetRatio r;
      try {
        r = parse_ratio(e_ratio);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto sources = collect_sources(e_images, e_masks);
      const auto pool = build_pool(sources, base.records.front().patch_size, e_min_px);
      const PatchManifest m = extend_dataset(base, pool, r.crack_fraction, e_seed, e_name);
      write_text(e_out, manifest_to_jsonl(m));
      if (!e_mat.empty()) materialize(m, sources, e_mat);
      std::cout << counts_line("base", base.counts()) << "\n" << counts_line("manifest", m.counts()) << "\n";
      std::cout << "added " << (m.records.size() - base.records.size()) << " background patches\n";
      return 0;
    }
    if (*annotate) {
      const RasterImage image = load_image(a_image);
      const PixelPos a = parse_endpoint(a_endpoints, 0), b = parse_endpoint(a_endpoints, 1);
      for (auto [p, name] : {std::pair{a, "A"}, std::pair{b, "B"}}) {
        if (p.x < 0 || p.y < 0 || p.x >= image.width() || p.y >= image.height()) {
          throw UsageError(std::string("endpoint ") + name + " (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                           ") is outside the " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                           " image");
        }
      }
      TrackParams tp;
      WidthParams wp;
      try {
        if (!a_params.empty()) tp = track_params_from_json(json_arg(a_params));
        if (!a_wparams.empty()) wp = width_params_from_json(json_arg(a_wparams));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const CakeWaveletStack stack;
      const CrackTrack t = track_crack(image, a, b, tp, stack);
      const WidthProfile w = extract_widths(image.luma(), t.vertices, wp);
      const BinaryMask mask = rasterize_mask(t.vertices, w, image.width(), image.height());
      save_mask(mask, a_out);
      const fs::path widths_path = a_widths.empty() ? fs::path(a_out).replace_extension(".widths.json") : fs::path(a_widths);
      write_text(widths_path, widths_to_json(w));
      if (!a_track.empty()) write_text(a_track, track_to_json(t, tp));
      std::cout << json{{"mask", a_out},
                        {"widths", widths_path.string()},
                        {"vertices", t.vertices.size()},
                        {"distance", t.distance},
                        {"mask_pixels", mask.count()}}
                       .dump()
                << "\n";
      return 0;
    }
    if (*eval) {
      std::vector<EvalPair> pairs;
      for (const auto& p : pair_dirs(v_pred, v_gt, "prediction", "ground truth")) {
        pairs.push_back({load_probability_map(p.a), load_mask(p.b), p.id});
      }
      if (v_thr <= 0.0 || v_thr >= 1.0) throw UsageError("--threshold must lie strictly between 0 and 1");
      const EvalReport rep = evaluate_dataset(pairs, v_tol, v_thr);
      if (!v_out.empty()) write_text(v_out, report_to_json(rep));
      std::cout << report_to_table(rep);
      return 0;
    }
    if (*loss_eval) {
      const BinaryMask y = load_mask(l_gt);
      const ProbabilityMap p = load_probability_map(l_pred);
      if (y.width() != p.width() || y.height() != p.height()) throw ShapeError("mask and prediction sizes differ");
      LossConfig cfg;
      cfg.epsilon = l_eps;
      json out = {{"bce", bce_loss(y, p, cfg)}, {"dice", dice_loss(y, p, cfg)}, {"dice_bce", dice_bce_loss(y, p, cfg)},
                  {"crack_pixels", y.count()}, {"epsilon", l_eps}};
      if (l_inv) {
        out["inversion"] = inversion_loss(y, p, cfg);
        out["inversion_branch"] = y.count() == 0 ? "inverted" : "direct";
      }
      if (!l_tversky.empty()) {
        TverskyConfig t{l_tversky[0], l_tversky[1]};
        try {
          t.validate();
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
        out["tversky"] = {{"alpha", t.alpha}, {"beta", t.beta}, {"value", tversky_loss(y, p, t, cfg)}};
      }
      if (!l_out.empty()) write_text(l_out, out.dump(2));
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*serve) {
      ServiceConfig cfg;
      cfg.data_dir = s_data;
      cfg.cache_budget_bytes = s_budget_mb << 20;
      cfg.max_upload_bytes = s_upload_mb << 20;
      cfg.working_size = s_working;
      cfg.static_dir = s_static;
      try {
        if (!s_params.empty()) cfg.track_defaults = track_params_from_json(json_arg(s_params));
        if (!s_wparams.empty()) cfg.width_defaults = width_params_from_json(json_arg(s_wparams));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto colon = s_listen.rfind(':');
      if (colon == std::string::npos) throw UsageError("--listen expects host:port");
      const std::string host = s_listen.substr(0, colon);
      int port = 0;
      try {
        port = std::stoi(s_listen.substr(colon + 1));
      } catch (const std::exception&) {
        throw UsageError("--listen expects host:port");
      }
      AnnotationService svc(cfg);
      httplib::Server server;
      svc.mount(server);
      if (port == 0) {
        port = server.bind_to_any_port(host);
      } else if (!server.bind_to_port(host, port)) {
        throw std::runtime_error("cannot listen on " + s_listen);
      }
      std::cout << json{{"listening", host + ":" + std::to_string(port)}, {"data_dir", cfg.data_dir.string()}}.dump()
                << std::endl;
      server.listen_after_bind();
      return 0;
    }
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const std::out_of_range& e) {
    return fail("usage", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
