// Copyright 2026 The dualhead Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dualhead/wire.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "dualhead/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dualhead {

static_assert(std::endian::native == std::endian::little, "wire format assumes a little-endian host");

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

json tensor_json(const Tensor& t) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(t.data());
  return {{"shape", t.shape()},
          {"dtype", "f32"},
          {"data", base64_encode({bytes, t.size() * sizeof(float)})}};
}

Tensor tensor_from(const json& j) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw GuidanceError("tensor envelope needs 'shape' and 'data'");
  }
  if (j.value("dtype", std::string("f32")) != "f32") throw GuidanceError("tensor dtype must be f32");
  Shape shape;
  for (const auto& d : j.at("shape")) {
    if (!d.is_number_integer() || d.get<int64_t>() < 0) throw GuidanceError("bad tensor shape");
    shape.push_back(d.get<int64_t>());
  }
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  const size_t n = static_cast<size_t>(shape_numel(shape));
  if (bytes.size() != n * sizeof(float)) {
    throw GuidanceError("tensor payload has " + std::to_string(bytes.size()) + " bytes, shape " +
                        shape_to_string(shape) + " needs " + std::to_string(n * sizeof(float)));
  }
  std::vector<float> data(n);
  std::memcpy(data.data(), bytes.data(), bytes.size());
  return Tensor(shape, std::move(data));
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw GuidanceError(std::string("malformed JSON: ") + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw GuidanceError(std::string("malformed message: ") + e.what());
  } catch (const Error& e) {
    if (dynamic_cast<const GuidanceError*>(&e)) throw;
    throw GuidanceError(std::string("malformed message: ") + e.what());
  }
}

}  // namespace

std::string base64_encode(std::span<const uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw GuidanceError("base64 length is not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    uint32_t v = 0;
    for (size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = decode_char(c);
      if (d < 0 || pad > 0) throw GuidanceError("invalid base64 character");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v));
  }
  return out;
}

std::string encode_tensor_envelope(const Tensor& t) { return tensor_json(t).dump(); }

Tensor decode_tensor_envelope(std::string_view text) {
  return guarded([&] { return tensor_from(parse(text)); });
}

std::string encode_sds_request(const GuidanceRequest& r) {
  json j = tensor_json(r.feature_image);
  j["prompt"] = r.prompt;
  j["cfg_scale"] = r.cfg_scale;
  j["t_min"] = r.t_min;
  j["t_max"] = r.t_max;
  j["seed"] = r.seed;
  j["iteration"] = r.iteration;
  return j.dump();
}

GuidanceRequest decode_sds_request(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    GuidanceRequest r;
    r.feature_image = tensor_from(j);
    r.prompt = j.value("prompt", std::string());
    r.cfg_scale = j.value("cfg_scale", 100.0f);
    r.t_min = j.value("t_min", 0.02f);
    r.t_max = j.value("t_max", 0.98f);
    r.seed = j.value("seed", uint64_t{0});
    r.iteration = j.value("iteration", int64_t{0});
    return r;
  });
}

std::string encode_sds_response(const GuidanceResponse& r) {
  json j;
  j["grad"] = tensor_json(r.grad);
  j["diagnostics"] = {{"timestep", r.timestep}, {"noise_norm", r.noise_norm}};
  return j.dump();
}

GuidanceResponse decode_sds_response(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    if (!j.contains("grad")) throw GuidanceError("response has no 'grad'");
    GuidanceResponse r;
    r.grad = tensor_from(j.at("grad"));
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      r.timestep = d.value("timestep", 0.0);
      r.noise_norm = d.value("noise_norm", 0.0);
    }
    return r;
  });
}

std::string encode_decode_request(const Tensor& features) { return tensor_json(features).dump(); }

std::string encode_decode_response(const Tensor& rgb) { return json{{"image", tensor_json(rgb)}}.dump(); }

Tensor decode_decode_response(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    if (!j.contains("image")) throw GuidanceError("response has no 'image'");
    return tensor_from(j.at("image"));
  });
}

std::string encode_segment_request(const SegmentRequest& r) {
  json j = tensor_json(r.image);
  if (!r.background.empty()) j["background"] = tensor_json(r.background);
  json anchors = json::array();
  for (const auto& a : r.anchors) anchors.push_back({a[0], a[1]});
  j["anchors"] = anchors;
  return j.dump();
}

SegmentRequest decode_segment_request(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    SegmentRequest r;
    r.image = tensor_from(j);
    if (j.contains("background")) r.background = tensor_from(j.at("background"));
    if (j.contains("anchors")) {
      for (const auto& a : j.at("anchors")) r.anchors.push_back({a.at(0).get<int32_t>(), a.at(1).get<int32_t>()});
    }
    return r;
  });
}

std::string encode_segment_response(const Mask& mask) {
  Tensor t({mask.height, mask.width});
  for (size_t i = 0; i < mask.data.size(); ++i) t[i] = mask.data[i] ? 1.0f : 0.0f;
  return json{{"mask", tensor_json(t)}}.dump();
}

Mask decode_segment_response(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    if (!j.contains("mask")) throw GuidanceError("response has no 'mask'");
    const Tensor t = tensor_from(j.at("mask"));
    if (t.rank() != 2) throw GuidanceError("segment mask must be [H,W]");
    Mask m(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
    for (size_t i = 0; i < t.size(); ++i) m.data[i] = t[i] > 0.5f ? 1 : 0;
    return m;
  });
}

Endpoint parse_endpoint(std::string_view url) {
  Endpoint e;
  std::string_view rest = url;
  if (rest.starts_with("http://")) rest.remove_prefix(7);
  if (rest.starts_with("https://")) throw ConfigError("https endpoints are not supported");
  while (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos) {
    e.host = std::string(rest);
  } else {
    e.host = std::string(rest.substr(0, colon));
    try {
      e.port = std::stoi(std::string(rest.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError("bad endpoint port in '" + std::string(url) + "'");
    }
  }
  if (e.host.empty() || e.port <= 0 || e.port > 65535) {
    throw ConfigError("bad endpoint '" + std::string(url) + "'");
  }
  return e;
}

namespace {

template <typename Call>
std::string with_retries(const Endpoint& e, const std::string& path, Call&& call) {
  const int attempts = std::max(1, e.retries + 1);
  std::string last_error;
  for (int a = 1; a <= attempts; ++a) {
    httplib::Client client(e.host, e.port);
    const auto secs = static_cast<time_t>(e.timeout_s);
    const auto usecs = static_cast<time_t>((e.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = call(client);
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    } else {
      return res->body;
    }
  }
  throw GuidanceError(path + " failed after " + std::to_string(attempts) + " attempt(s): " + last_error,
                      attempts);
}

}  // namespace

std::string WireClient::post(const std::string& path, const std::string& body) const {
  return with_retries(endpoint_, path, [&](httplib::Client& c) {
    return c.Post(path, body, "application/json");
  });
}

std::string WireClient::get(const std::string& path) const {
  return with_retries(endpoint_, path, [&](httplib::Client& c) { return c.Get(path); });
}

}  // namespace dualhead
