#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matcher/error.hpp"
#include "matcher/segmenter.hpp"

namespace matcher {

/// Row-major alternating run lengths, starting with the count of false pixels
/// (possibly 0).
std::vector<std::uint32_t> rle_encode(const PixelMask& mask);
PixelMask rle_decode(int height, int width, const std::vector<std::uint32_t>& runs);

nlohmann::json request_to_json(const SegmentRequest& req);
SegmentRequest request_from_json(const nlohmann::json& j);
nlohmann::json response_to_json(const SegmentResponse& resp);
SegmentResponse response_from_json(const nlohmann::json& j);
nlohmann::json error_to_json(ErrorCode code, const std::string& message);

/// A bidirectional newline-delimited text stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  /// nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
};

/// Line channel over POSIX file descriptors (socket or pipe pair). Owns the
/// descriptors.
class FdLineChannel final : public LineChannel {
 public:
  FdLineChannel(int read_fd, int write_fd);
  ~FdLineChannel() override;
  FdLineChannel(const FdLineChannel&) = delete;
  FdLineChannel& operator=(const FdLineChannel&) = delete;

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line() override;

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

/// Opens a channel for an address of the form `unix:/path`, `tcp:host:port`,
/// `host:port`, or `exec:<shell command>` (child process stdio).
std::unique_ptr<LineChannel> connect_channel(const std::string& address);

/// Client for an external segmenter process. Requests are serialized per
/// instance; use one instance per worker for concurrency.
class ExternalSegmenter final : public Segmenter {
 public:
  explicit ExternalSegmenter(std::string address, int connect_attempts = 3);
  /// Uses an already-open channel (no reconnects).
  explicit ExternalSegmenter(std::unique_ptr<LineChannel> channel);

  SegmentResponse segment(const SegmentRequest& request) override;

 private:
  LineChannel& channel();

  std::string address_;
  int connect_attempts_ = 1;
  std::unique_ptr<LineChannel> channel_;
};

/// Answers protocol requests from `channel` with `backend` until the stream
/// ends. Failures become structured error objects on the wire.
void serve_segmenter(Segmenter& backend, LineChannel& channel);

}  // namespace matcher
