#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "crackseg/geodesic.hpp"
#include "crackseg/orientation.hpp"
#include "crackseg/widthseg.hpp"

namespace httplib {
class Server;
}

namespace crackseg {

struct ServiceConfig {
  std::filesystem::path data_dir = "crackseg-data";
  std::size_t max_upload_bytes = std::size_t(64) << 20;
  std::size_t cache_budget_bytes = std::size_t(1) << 30;  // orientation scores kept in memory
  int working_size = 0;  // longest side of the tracking copy; 0 tracks at full resolution
  TrackParams track_defaults;
  WidthParams width_defaults;
  CakeWaveletParams wavelet;
  std::filesystem::path static_dir;  // served under /ui when set
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// Annotation engine behind the HTTP routes. Handlers are callable directly;
/// mount() wires them into an httplib server.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  HttpReply upload_image(const std::string& body);
  HttpReply get_image(const std::string& image_id) const;
  HttpReply track(const std::string& image_id, const std::string& body);
  HttpReply segment(const std::string& image_id, const std::string& body);
  HttpReply evaluate(const std::string& body);
  HttpReply session(const std::string& image_id) const;
  HttpReply get_mask(const std::string& image_id, const std::string& mask_id) const;
  static std::string openapi();

  void mount(httplib::Server& server);

  /// Number of lifts actually computed (cache misses that ran).
  std::int64_t lift_computations() const;
  const ServiceConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(const void* data, std::size_t size);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace crackseg
