#include "crackseg/annotsvc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <future>
#include <list>
#include <map>
#include <mutex>
#include <regex>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "crackseg/augment.hpp"
#include "crackseg/error.hpp"
#include "crackseg/evalmetrics.hpp"
#include "crackseg/png_io.hpp"

namespace crackseg {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("base64: invalid input");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

// Thrown inside handlers, turned into {"error": {...}} replies.
struct HttpError : std::runtime_error {
  int status;
  json detail;
  HttpError(int s, const std::string& msg, json d = nullptr) : std::runtime_error(msg), status(s), detail(std::move(d)) {}
};

HttpReply json_reply(const json& j, int status = 200) {
  HttpReply r;
  r.status = status;
  r.body = j.dump(2);
  return r;
}

HttpReply error_reply(int status, const std::string& message, const json& detail = nullptr) {
  json e = {{"status", status}, {"message", message}};
  if (!detail.is_null()) e["detail"] = detail;
  return json_reply({{"error", e}}, status);
}

bool valid_id(const std::string& id) {
  static const std::regex re("[0-9a-f]{64}");
  return std::regex_match(id, re);
}

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw HttpError(400, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("malformed JSON: ") + e.what());
  }
}

std::string wavelet_key(const CakeWaveletParams& p) {
  return std::to_string(p.n_orientations) + "," + std::to_string(p.spatial_size) + "," + std::to_string(p.angular_order) +
         "," + std::to_string(p.dc_radius) + "," + std::to_string(p.inflection) + "," + std::to_string(p.taper_order);
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// LRU of orientation scores bounded in bytes; concurrent first requests for
// a key share one computation.
class LiftCache {
 public:
  using Value = std::shared_ptr<const OrientationScore>;

  explicit LiftCache(std::size_t budget) : budget_(budget) {}

  Value get(const std::string& key, const std::function<OrientationScore()>& compute, bool& hit) {
    std::unique_lock lock(mu_);
    if (auto it = index_.find(key); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      hit = true;
      return it->second->second;
    }
    if (auto it = pending_.find(key); it != pending_.end()) {
      auto fut = it->second;
      lock.unlock();
      hit = true;
      return fut.get();
    }
    std::promise<Value> promise;
    pending_.emplace(key, promise.get_future().share());
    lock.unlock();
    hit = false;
    Value v;
    try {
      v = std::make_shared<const OrientationScore>(compute());
      computations_.fetch_add(1);
    } catch (...) {
      lock.lock();
      pending_.erase(key);
      promise.set_exception(std::current_exception());
      throw;
    }
    lock.lock();
    order_.emplace_front(key, v);
    index_[key] = order_.begin();
    used_ += v->bytes();
    // Keep at least the newest entry even when it alone exceeds the budget.
    while (used_ > budget_ && order_.size() > 1) {
      used_ -= order_.back().second->bytes();
      index_.erase(order_.back().first);
      order_.pop_back();
    }
    pending_.erase(key);
    promise.set_value(v);
    return v;
  }

  std::int64_t computations() const { return computations_.load(); }

 private:
  std::size_t budget_;
  std::size_t used_ = 0;
  std::mutex mu_;
  std::list<std::pair<std::string, Value>> order_;
  std::unordered_map<std::string, std::list<std::pair<std::string, Value>>::iterator> index_;
  std::map<std::string, std::shared_future<Value>> pending_;
  std::atomic<std::int64_t> computations_{0};
};

}  // namespace

struct AnnotationService::Impl {
  ServiceConfig cfg;
  CakeWaveletStack stack;
  LiftCache cache;
  std::mutex fs_mu;  // serialises session bookkeeping on disk

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), stack(cfg.wavelet), cache(cfg.cache_budget_bytes) {
    fs::create_directories(cfg.data_dir / "images");
    fs::create_directories(cfg.data_dir / "sessions");
  }

  fs::path image_path(const std::string& id) const { return cfg.data_dir / "images" / (id + ".png"); }
  fs::path session_dir(const std::string& id) const { return cfg.data_dir / "sessions" / id; }

  RasterImage load(const std::string& id) const {
    if (!valid_id(id) || !fs::exists(image_path(id))) throw HttpError(404, "unknown image " + id);
    return load_image(image_path(id));
  }

  void touch_session(const std::string& id) {
    std::lock_guard lock(fs_mu);
    const fs::path dir = session_dir(id);
    if (fs::exists(dir / "session.json")) return;
    fs::create_directories(dir / "tracks");
    fs::create_directories(dir / "masks");
    const json s = {{"session_id", id}, {"image_id", id}, {"created_at", iso_now()}};
    const std::string text = s.dump(2);
    write_file_atomic(dir / "session.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  void persist(const fs::path& path, const std::string& text) {
    std::lock_guard lock(fs_mu);
    if (fs::exists(path)) return;
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
};

AnnotationService::AnnotationService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
AnnotationService::~AnnotationService() = default;

const ServiceConfig& AnnotationService::config() const { return impl_->cfg; }
std::int64_t AnnotationService::lift_computations() const { return impl_->cache.computations(); }

namespace {

template <typename F>
HttpReply guarded(F&& f) {
  try {
    return f();
  } catch (const HttpError& e) {
    return error_reply(e.status, e.what(), e.detail);
  } catch (const UnreachableError& e) {
    return error_reply(409, e.what());
  } catch (const std::out_of_range& e) {
    return error_reply(422, e.what());
  } catch (const std::invalid_argument& e) {
    return error_reply(422, e.what());
  } catch (const std::exception& e) {
    spdlog::error("request failed: {}", e.what());
    return error_reply(500, e.what());
  }
}

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

PixelPos parse_point(const json& p, const char* name) {
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
    throw HttpError(422, std::string("endpoint ") + name + " must be [x, y]");
  }
  const double x = p[0].get<double>(), y = p[1].get<double>();
  if (x != std::floor(x) || y != std::floor(y)) throw HttpError(422, std::string("endpoint ") + name + " must be integral");
  return {static_cast<int>(x), static_cast<int>(y)};
}

}  // namespace

HttpReply AnnotationService::upload_image(const std::string& body) {
  return guarded([&] {
    if (body.size() > impl_->cfg.max_upload_bytes) {
      throw HttpError(413, "upload of " + std::to_string(body.size()) + " bytes exceeds the limit of " +
                               std::to_string(impl_->cfg.max_upload_bytes));
    }
    if (body.size() < 8 || std::memcmp(body.data(), kPngSignature, 8) != 0) throw HttpError(415, "body is not a PNG");
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(body.data());
    RasterImage img;
    try {
      img = decode_image(std::span(bytes, body.size()));
    } catch (const std::exception& e) {
      throw HttpError(415, std::string("PNG decode failed: ") + e.what());
    }
    const std::string id = sha256_hex(body.data(), body.size());
    impl_->persist(impl_->image_path(id), body);
    impl_->touch_session(id);
    return json_reply({{"image_id", id}, {"width", img.width()}, {"height", img.height()}, {"channels", img.channels()}});
  });
}

HttpReply AnnotationService::get_image(const std::string& id) const {
  return guarded([&] {
    if (!valid_id(id) || !fs::exists(impl_->image_path(id))) throw HttpError(404, "unknown image " + id);
    const Bytes b = read_file(impl_->image_path(id));
    HttpReply r;
    r.content_type = "image/png";
    r.body.assign(b.begin(), b.end());
    return r;
  });
}

HttpReply AnnotationService::track(const std::string& id, const std::string& body) {
  return guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    const RasterImage image = impl_->load(id);
    const json req = parse_body(body);
    if (!req.contains("endpoints") || !req["endpoints"].is_array() || req["endpoints"].size() != 2) {
      throw HttpError(422, "\"endpoints\" must hold two [x, y] pairs");
    }
    const PixelPos a = parse_point(req["endpoints"][0], "A"), b = parse_point(req["endpoints"][1], "B");
    const int w = image.width(), h = image.height();
    for (auto [p, name] : {std::pair{a, "A"}, std::pair{b, "B"}}) {
      if (p.x < 0 || p.y < 0 || p.x >= w || p.y >= h) {
        throw HttpError(422,
                        std::string("endpoint ") + name + " (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") is outside the " + std::to_string(w) + "x" + std::to_string(h) + " image",
                        {{"endpoint", name}, {"x", p.x}, {"y", p.y}});
      }
    }
    TrackParams params = impl_->cfg.track_defaults;
    if (req.contains("params") && !req["params"].is_null()) params = track_params_from_json(req["params"].dump(), params);

    // Working copy: longest side capped at working_size, coordinates mapped.
    int ww = w, wh = h;
    if (impl_->cfg.working_size > 0 && std::max(w, h) > impl_->cfg.working_size) {
      const double s = double(impl_->cfg.working_size) / std::max(w, h);
      ww = std::max(1, static_cast<int>(std::lround(w * s)));
      wh = std::max(1, static_cast<int>(std::lround(h * s)));
    }
    const double sx = double(w) / ww, sy = double(h) / wh;
    auto to_work = [&](PixelPos p) {
      return PixelPos{std::clamp(static_cast<int>(std::lround(p.x / sx)), 0, ww - 1),
                      std::clamp(static_cast<int>(std::lround(p.y / sy)), 0, wh - 1)};
    };
    const std::string key = id + "|" + wavelet_key(impl_->stack.params()) + "|" + std::to_string(ww) + "x" + std::to_string(wh);
    bool hit = false;
    const auto score = impl_->cache.get(
        key,
        [&] {
          Plane gray = image.luma();
          if (ww != w || wh != h) gray = resize_bilinear(gray, ww, wh);
          return lift(gray, impl_->stack);
        },
        hit);
    CrackTrack t = track_crack(*score, to_work(a), to_work(b), params);
    for (auto& v : t.vertices) v.x *= sx, v.y *= sy;

    json out = json::parse(track_to_json(t, params, -1));
    out["cost_stats"] = {{"distance", t.distance}, {"mean_cost", t.mean_cost}, {"visited", t.visited}};
    out.erase("distance");
    out.erase("mean_cost");
    out["image_id"] = id;
    out["endpoints"] = {{a.x, a.y}, {b.x, b.y}};
    out["working_scale"] = {sx, sy};
    out["downscaled"] = (ww != w || wh != h);
    HttpReply r = json_reply(out);
    impl_->touch_session(id);
    impl_->persist(impl_->session_dir(id) / "tracks" / (sha256_hex(r.body.data(), r.body.size()) + ".json"), r.body);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.headers = {{"X-Lift-Cache", hit ? "hit" : "miss"}, {"X-Elapsed-Ms", std::to_string(ms)}};
    return r;
  });
}

HttpReply AnnotationService::segment(const std::string& id, const std::string& body) {
  return guarded([&] {
    const RasterImage image = impl_->load(id);
    const json req = parse_body(body);
    if (!req.contains("track")) throw HttpError(422, "missing \"track\"");
    CrackTrack t;
    try {
      t = track_from_json(req["track"].dump());
    } catch (const std::invalid_argument& e) {
      throw HttpError(422, e.what());
    }
    if (t.vertices.empty()) throw HttpError(422, "track is empty");
    for (std::size_t i = 0; i < t.vertices.size(); ++i) {
      const auto& v = t.vertices[i];
      if (!(v.x >= 0 && v.y >= 0 && v.x <= image.width() - 1 && v.y <= image.height() - 1)) {
        throw HttpError(422, "track vertex " + std::to_string(i) + " lies outside the image", {{"index", i}, {"x", v.x}, {"y", v.y}});
      }
    }
    WidthParams wp = impl_->cfg.width_defaults;
    if (req.contains("width_params") && !req["width_params"].is_null()) wp = width_params_from_json(req["width_params"].dump(), wp);
    const WidthProfile widths = extract_widths(image.luma(), t.vertices, wp);
    const BinaryMask mask = rasterize_mask(t.vertices, widths, image.width(), image.height());
    const Bytes png = encode_mask(mask);
    const std::string mask_id = sha256_hex(png.data(), png.size());

    impl_->touch_session(id);
    const fs::path dir = impl_->session_dir(id) / "masks";
    impl_->persist(dir / (mask_id + ".png"), std::string(png.begin(), png.end()));
    const std::string wjson = widths_to_json(widths);
    impl_->persist(dir / (mask_id + ".widths.json"), wjson);

    return json_reply({{"image_id", id},
                       {"mask_id", mask_id},
                       {"width", mask.width()},
                       {"height", mask.height()},
                       {"mask_png_base64", base64_encode(png)},
                       {"widths", json::parse(wjson)}});
  });
}

HttpReply AnnotationService::get_mask(const std::string& id, const std::string& mask_id) const {
  return guarded([&] {
    const fs::path p = impl_->session_dir(id) / "masks" / (mask_id + ".png");
    if (!valid_id(id) || !valid_id(mask_id) || !fs::exists(p)) throw HttpError(404, "unknown mask " + mask_id);
    const Bytes b = read_file(p);
    HttpReply r;
    r.content_type = "image/png";
    r.body.assign(b.begin(), b.end());
    return r;
  });
}

HttpReply AnnotationService::session(const std::string& id) const {
  return guarded([&] {
    const fs::path dir = impl_->session_dir(id);
    if (!valid_id(id) || !fs::exists(dir / "session.json")) throw HttpError(404, "unknown session " + id);
    const Bytes raw = read_file(dir / "session.json");
    json s = json::parse(std::string(raw.begin(), raw.end()));
    std::vector<std::string> tracks, masks;
    for (const auto& e : fs::directory_iterator(dir / "tracks")) tracks.push_back(e.path().stem().string());
    for (const auto& e : fs::directory_iterator(dir / "masks"))
      if (e.path().extension() == ".png") masks.push_back(e.path().stem().string());
    std::sort(tracks.begin(), tracks.end());
    std::sort(masks.begin(), masks.end());
    s["tracks"] = tracks;
    s["masks"] = masks;
    return json_reply(s);
  });
}

HttpReply AnnotationService::evaluate(const std::string& body) {
  return guarded([&] {
    const json req = parse_body(body);
    if (!req.contains("pairs") || !req["pairs"].is_array()) throw HttpError(422, "\"pairs\" must be an array");
    if (req["pairs"].empty()) throw HttpError(422, "\"pairs\" is empty");
    const double tolerance = req.value("tolerance", 0.0);
    const double threshold = req.value("threshold", 0.5);
    if (!(tolerance >= 0.0)) throw HttpError(422, "tolerance must be >= 0");
    if (!(threshold > 0.0 && threshold < 1.0)) throw HttpError(422, "threshold must lie in (0, 1)");
    std::vector<EvalPair> pairs;
    for (const auto& p : req["pairs"]) {
      if (!p.is_object() || !p.contains("prediction") || !p.contains("ground_truth") || !p["prediction"].is_string() ||
          !p["ground_truth"].is_string()) {
        throw HttpError(422, "each pair needs \"prediction\" and \"ground_truth\" image ids");
      }
      const std::string pid = p["prediction"], gid = p["ground_truth"];
      for (const auto& x : {pid, gid})
        if (!valid_id(x) || !fs::exists(impl_->image_path(x))) throw HttpError(404, "unknown image " + x);
      EvalPair e;
      e.prediction = load_probability_map(impl_->image_path(pid));
      try {
        e.ground_truth = load_mask(impl_->image_path(gid));
      } catch (const std::exception& ex) {
        throw HttpError(422, std::string("ground truth ") + gid + ": " + ex.what());
      }
      e.image_id = p.value("image_id", gid);
      pairs.push_back(std::move(e));
    }
    return json_reply(json::parse(report_to_json(evaluate_dataset(pairs, tolerance, threshold))));
  });
}

std::string AnnotationService::openapi() {
  auto error_ref = json{{"$ref", "#/components/schemas/Error"}};
  auto err = [&](const char* what) {
    return json{{"description", what}, {"content", {{"application/json", {{"schema", error_ref}}}}}};
  };
  auto obj = [](json props, json required = json::array()) {
    return json{{"type", "object"}, {"properties", std::move(props)}, {"required", std::move(required)}};
  };
  const json id_param = {{"name", "id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}};
  const json point = {{"type", "array"}, {"items", {{"type", "integer"}}}, {"minItems", 2}, {"maxItems", 2}};
  const json vertex = obj({{"x", {{"type", "number"}}}, {"y", {{"type", "number"}}}, {"theta", {{"type", "number"}}}},
                          {"x", "y"});
  const json metric = obj({{"xi", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                           {"zeta", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}}},
                           {"lambda", {{"type", "number"}, {"minimum", 0}}},
                           {"cost_mu", {{"type", "number"}}},
                           {"cost_power", {{"type", "number"}}},
                           {"stiffness_length", {{"type", "number"}}},
                           {"symmetric", {{"type", "boolean"}}},
                           {"scheme", {{"type", "string"}, {"enum", {"semi_lagrangian", "dijkstra"}}}}});
  const json width_params = obj({{"sigma", {{"type", "number"}}},
                                 {"max_width", {{"type", "integer"}}},
                                 {"step_penalty", {{"type", "number"}}},
                                 {"bias_correction", {{"type", "boolean"}}}});
  auto body = [](json schema) { return json{{"required", true}, {"content", {{"application/json", {{"schema", std::move(schema)}}}}}}; };
  auto ok = [](const char* what, json schema) {
    return json{{"description", what}, {"content", {{"application/json", {{"schema", std::move(schema)}}}}}};
  };
  auto merged = [](json a, const json& b) {
    a.update(b);
    return a;
  };
  const json png = {{"content", {{"image/png", {{"schema", {{"type", "string"}, {"format", "binary"}}}}}}}};

  json doc;
  doc["openapi"] = "3.0.3";
  doc["info"] = {{"title", "crackseg annotation service"}, {"version", "1.0.0"}};
  doc["components"]["schemas"]["Error"] =
      obj({{"error", obj({{"status", {{"type", "integer"}}}, {"message", {{"type", "string"}}}, {"detail", json::object()}})}});
  auto& paths = doc["paths"];
  paths["/images"]["post"] = {
      {"summary", "Upload a PNG; the id is the SHA-256 of the bytes"},
      {"requestBody", merged({{"required", true}}, png)},
      {"responses",
       {{"200", ok("stored", obj({{"image_id", {{"type", "string"}}}, {"width", {{"type", "integer"}}}, {"height", {{"type", "integer"}}}}))},
        {"413", err("body larger than the upload limit")},
        {"415", err("body is not a decodable PNG")}}}};
  paths["/images/{id}"]["get"] = {{"parameters", {id_param}},
                                  {"responses", {{"200", merged({{"description", "original bytes"}}, png)}, {"404", err("unknown image")}}}};
  paths["/images/{id}/track"]["post"] = {
      {"parameters", {id_param}},
      {"requestBody", body(obj({{"endpoints", {{"type", "array"}, {"items", point}, {"minItems", 2}, {"maxItems", 2}}}, {"params", metric}},
                               {"endpoints"}))},
      {"responses",
       {{"200", ok("geodesic track; header X-Lift-Cache is hit or miss",
                   obj({{"track", {{"type", "array"}, {"items", vertex}}},
                        {"cost_stats", obj({{"distance", {{"type", "number"}}}, {"mean_cost", {{"type", "number"}}}, {"visited", {{"type", "integer"}}}})},
                        {"params", metric},
                        {"working_scale", {{"type", "array"}, {"items", {{"type", "number"}}}}},
                        {"downscaled", {{"type", "boolean"}}}}))},
        {"400", err("malformed JSON")},
        {"404", err("unknown image")},
        {"409", err("endpoints are not connected under the metric")},
        {"422", err("endpoint out of bounds or invalid parameters")}}}};
  paths["/images/{id}/segment"]["post"] = {
      {"parameters", {id_param}},
      {"requestBody", body(obj({{"track", {{"type", "array"}, {"items", vertex}}}, {"width_params", width_params}}, {"track"}))},
      {"responses",
       {{"200", ok("mask and width profile",
                   obj({{"mask_id", {{"type", "string"}}},
                        {"mask_png_base64", {{"type", "string"}}},
                        {"width", {{"type", "integer"}}},
                        {"height", {{"type", "integer"}}},
                        {"widths", {{"type", "array"},
                                    {"items", obj({{"s", {{"type", "number"}}}, {"left", {{"type", "number"}}}, {"right", {{"type", "number"}}}})}}}}))},
        {"404", err("unknown image")},
        {"422", err("empty or out-of-bounds track")}}}};
  paths["/images/{id}/session"]["get"] = {
      {"parameters", {id_param}},
      {"responses", {{"200", ok("persisted session record", obj({{"session_id", {{"type", "string"}}}, {"created_at", {{"type", "string"}}},
                                                                  {"tracks", {{"type", "array"}}}, {"masks", {{"type", "array"}}}}))},
                     {"404", err("unknown session")}}}};
  paths["/images/{id}/masks/{mask_id}"]["get"] = {
      {"parameters", {id_param, {{"name", "mask_id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}}}},
      {"responses", {{"200", merged({{"description", "exported mask"}}, png)}, {"404", err("unknown mask")}}}};
  paths["/evaluate"]["post"] = {
      {"requestBody",
       body(obj({{"pairs", {{"type", "array"},
                            {"items", obj({{"prediction", {{"type", "string"}}}, {"ground_truth", {{"type", "string"}}}, {"image_id", {{"type", "string"}}}},
                                          {"prediction", "ground_truth"})}}},
                 {"tolerance", {{"type", "number"}}},
                 {"threshold", {{"type", "number"}}}},
                {"pairs"}))},
      {"responses", {{"200", ok("evaluation report", {{"type", "object"}})}, {"404", err("unknown image")}, {"422", err("empty pair list")}}}};
  paths["/spec"]["get"] = {{"responses", {{"200", ok("this document", {{"type", "object"}})}}}};
  return doc.dump(2);
}

void AnnotationService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  };
  server.set_payload_max_length(impl_->cfg.max_upload_bytes + 1);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Expose-Headers", "X-Lift-Cache, X-Elapsed-Ms"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Post("/images", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, upload_image(req.body)); });
  server.Get(R"(/images/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, get_image(req.matches[1])); });
  server.Post(R"(/images/([^/]+)/track)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, track(req.matches[1], req.body));
  });
  server.Post(R"(/images/([^/]+)/segment)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, segment(req.matches[1], req.body));
  });
  server.Get(R"(/images/([^/]+)/session)",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, session(req.matches[1])); });
  server.Get(R"(/images/([^/]+)/masks/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_mask(req.matches[1], req.matches[2]));
  });
  server.Post("/evaluate", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, evaluate(req.body)); });
  server.Get("/spec", [](const httplib::Request&, httplib::Response& res) { res.set_content(openapi(), "application/json"); });
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("{\"ok\": true}", "application/json"); });
  server.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const int status = res.status;
    send(res, error_reply(status, status == 413 ? "payload too large" : status == 404 ? "no such route" : "request failed"));
  });
  if (!impl_->cfg.static_dir.empty()) server.set_mount_point("/ui", impl_->cfg.static_dir.string());
}

}  // namespace crackseg
