#include "unveil/time_reversal.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace unveil {

using nlohmann::json;

RemoteInpaintConfig with_env_override(RemoteInpaintConfig config) {
  if (const char* env = std::getenv("UNVEIL_INPAINT_ENDPOINT"))
    config.endpoint = env;
  return config;
}

namespace {

std::string encode_b64_png(const Image& image) {
  std::vector<uint8_t> png = encode_png(image);
  return base64_encode(png.data(), png.size());
}

}  // namespace

Image RemoteInpainter::inpaint(const InpaintJob& job, const Image& target,
                               const MaskImage& mask, const Image* reference) {
  json payload;
  payload["mode"] =
      job.mode == InpaintJob::Mode::kReference ? "reference" : "unconditional";
  payload["image_b64"] = encode_b64_png(target);
  payload["mask_b64"] = encode_b64_png(mask_to_image(mask));
  if (reference) payload["reference_b64"] = encode_b64_png(*reference);
  const std::string body = payload.dump();

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
  client.set_read_timeout(config_.timeout_ms / 1000,
                          (config_.timeout_ms % 1000) * 1000LL);
  client.set_write_timeout(config_.timeout_ms / 1000,
                           (config_.timeout_ms % 1000) * 1000LL);

  httplib::Result result;
  int backoff = config_.backoff_ms;
  const int attempts = std::max(1, config_.attempts);
  for (int attempt = 0;; ++attempt) {
    result = client.Post("/inpaint", body, "application/json");
    const bool transport_failure = !result;
    const bool server_failure = result && result->status >= 500;
    if (!transport_failure && !server_failure) break;
    if (attempt + 1 >= attempts) {
      if (transport_failure)
        throw RemoteInpaintError(
            RemoteInpaintError::Kind::kTransport,
            "inpaint endpoint unreachable or timed out: " +
                httplib::to_string(result.error()));
      throw RemoteInpaintError(
          RemoteInpaintError::Kind::kHttpStatus,
          "inpaint endpoint returned status " + std::to_string(result->status));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
    backoff *= 2;
  }
  if (result->status < 200 || result->status >= 300)
    throw RemoteInpaintError(
        RemoteInpaintError::Kind::kHttpStatus,
        "inpaint endpoint returned status " + std::to_string(result->status));

  Image remote;
  try {
    json reply = json::parse(result->body);
    std::vector<uint8_t> png = base64_decode(reply.at("image_b64").get<std::string>());
    remote = decode_png(png);
  } catch (const std::exception& e) {
    throw RemoteInpaintError(RemoteInpaintError::Kind::kMalformedPayload,
                             std::string("inpaint reply malformed: ") + e.what());
  }
  if (remote.width != target.width || remote.height != target.height ||
      remote.channels != target.channels)
    throw RemoteInpaintError(RemoteInpaintError::Kind::kMalformedPayload,
                             "inpaint reply has wrong dimensions");

  // The protocol requires outside-mask pixels untouched; enforce it locally.
  Image out = target;
  for (size_t p = 0; p < mask.data.size(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < target.channels; ++c)
      out.data[p * target.channels + c] = remote.data[p * target.channels + c];
  }
  return out;
}

}  // namespace unveil
