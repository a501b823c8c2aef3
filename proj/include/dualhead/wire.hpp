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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualhead/messages.hpp"
#include "dualhead/raster.hpp"
#include "dualhead/tensor.hpp"

namespace dualhead {

// RFC 4648 base64 with padding. Decoding rejects anything else.
std::string base64_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> base64_decode(std::string_view text);

// Tensor envelope: {"shape":[...],"dtype":"f32","data":"<base64 LE float32>"}.
std::string encode_tensor_envelope(const Tensor& t);
Tensor decode_tensor_envelope(std::string_view json);

// Message bodies of /v1/sds_grad, /v1/decode and /v1/segment. Decoders throw
// GuidanceError on malformed input.
std::string encode_sds_request(const GuidanceRequest& r);
GuidanceRequest decode_sds_request(std::string_view json);
std::string encode_sds_response(const GuidanceResponse& r);
GuidanceResponse decode_sds_response(std::string_view json);

std::string encode_decode_request(const Tensor& features);
Tensor decode_decode_response(std::string_view json);
std::string encode_decode_response(const Tensor& rgb);

std::string encode_segment_request(const SegmentRequest& r);
SegmentRequest decode_segment_request(std::string_view json);
std::string encode_segment_response(const Mask& mask);
Mask decode_segment_response(std::string_view json);

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 8765;
  double timeout_s = 60.0;
  int retries = 2;  // extra attempts after the first
};

// "http://host:port" or "host:port".
Endpoint parse_endpoint(std::string_view url);

// Synchronous HTTP/1.1 JSON client. Transport failures and non-200 replies
// are retried; the final failure throws GuidanceError with the attempt count.
class WireClient {
 public:
  explicit WireClient(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::string post(const std::string& path, const std::string& body) const;
  std::string get(const std::string& path) const;
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
};

}  // namespace dualhead
