#include "matcher/wire.hpp"

#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "matcher/error.hpp"

namespace matcher {

using nlohmann::json;

std::vector<std::uint32_t> rle_encode(const PixelMask& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t b : mask.bits()) {
    if (b != current) {
      runs.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

PixelMask rle_decode(int height, int width, const std::vector<std::uint32_t>& runs) {
  if (height < 0 || width < 0) fail(ErrorCode::kProtocolError, "negative mask dims");
  const auto total = static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  std::uint8_t value = 0;
  for (std::uint32_t run : runs) {
    if (bits.size() + run > total) fail(ErrorCode::kProtocolError, "RLE runs exceed mask size");
    bits.insert(bits.end(), run, value);
    value ^= 1;
  }
  if (bits.size() != total) fail(ErrorCode::kProtocolError, "RLE runs do not fill the mask");
  return {height, width, std::move(bits)};
}

json request_to_json(const SegmentRequest& req) {
  json points = json::array();
  for (const auto& p : req.points) points.push_back({p.x, p.y, p.label});
  json box = nullptr;
  if (req.box) box = {req.box->x0, req.box->y0, req.box->x1, req.box->y1};
  return {{"image_id", req.image_id}, {"points", points}, {"box", box}, {"multimask", req.multimask}};
}

SegmentRequest request_from_json(const json& j) {
  try {
    SegmentRequest req;
    req.image_id = j.at("image_id").get<std::string>();
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 3) fail(ErrorCode::kProtocolError, "point must be [x,y,label]");
      req.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<int>()});
    }
    const auto& box = j.at("box");
    if (!box.is_null()) {
      if (!box.is_array() || box.size() != 4) fail(ErrorCode::kProtocolError, "box must be [x0,y0,x1,y1]");
      req.box = Box{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                    box[3].get<double>()};
    }
    req.multimask = j.at("multimask").get<bool>();
    return req;
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("malformed request: ") + e.what());
  }
}

json response_to_json(const SegmentResponse& resp) {
  json masks = json::array();
  for (const auto& m : resp.masks) {
    masks.push_back({{"h", m.height()}, {"w", m.width()}, {"rle", rle_encode(m)}});
  }
  return {{"masks", masks}, {"confidences", resp.confidences}};
}

json error_to_json(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", std::string(error_code_name(code))}, {"message", message}}}};
}

SegmentResponse response_from_json(const json& j) {
  if (j.contains("error")) {
    const auto& err = j.at("error");
    const std::string code = err.value("code", "");
    const std::string message = err.value("message", "");
    if (code == "UnknownImage") fail(ErrorCode::kUnknownImage, message);
    if (code == "BackendUnavailable") fail(ErrorCode::kBackendUnavailable, message);
    fail(ErrorCode::kProtocolError, "backend error " + code + ": " + message);
  }
  try {
    SegmentResponse resp;
    for (const auto& m : j.at("masks")) {
      resp.masks.push_back(rle_decode(m.at("h").get<int>(), m.at("w").get<int>(),
                                      m.at("rle").get<std::vector<std::uint32_t>>()));
    }
    resp.confidences = j.at("confidences").get<std::vector<double>>();
    if (resp.masks.size() != resp.confidences.size()) {
      fail(ErrorCode::kProtocolError, "masks and confidences differ in length");
    }
    if (resp.masks.empty()) fail(ErrorCode::kProtocolError, "response has no masks");
    for (double c : resp.confidences) {
      if (!(c >= 0.0 && c <= 1.0)) fail(ErrorCode::kProtocolError, "confidence outside [0,1]");
    }
    return resp;
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("malformed response: ") + e.what());
  }
}

FdLineChannel::FdLineChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

FdLineChannel::~FdLineChannel() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdLineChannel::write_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto n = ::send(write_fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      const auto w = ::write(write_fd_, data.data() + sent, data.size() - sent);
      if (w < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kBackendUnavailable, std::string("write failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(w);
      continue;
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::kBackendUnavailable, std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdLineChannel::read_line() {
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    char chunk[4096];
    const auto n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::kBackendUnavailable, std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

class ProcessLineChannel final : public LineChannel {
 public:
  ProcessLineChannel(pid_t pid, int read_fd, int write_fd) : pid_(pid), fds_(read_fd, write_fd) {}
  ~ProcessLineChannel() override {
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
  }
  void write_line(const std::string& line) override { fds_.write_line(line); }
  std::optional<std::string> read_line() override { return fds_.read_line(); }

 private:
  pid_t pid_;
  FdLineChannel fds_;
};

std::unique_ptr<LineChannel> spawn_process(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) fail(ErrorCode::kBackendUnavailable, "pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    fail(ErrorCode::kBackendUnavailable, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) fail(ErrorCode::kBackendUnavailable, "fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ProcessLineChannel>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<LineChannel> connect_unix(const std::string& path) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) fail(ErrorCode::kBackendUnavailable, "socket failed");
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) {
    ::close(fd);
    fail(ErrorCode::kInvalidArgument, "unix socket path too long");
  }
  std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd);
    fail(ErrorCode::kBackendUnavailable, "connect " + path + ": " + std::strerror(err));
  }
  return std::make_unique<FdLineChannel>(fd, fd);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    fail(ErrorCode::kBackendUnavailable, "cannot resolve " + host + ":" + port);
  }
  int fd = -1;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) fail(ErrorCode::kBackendUnavailable, "connect " + host + ":" + port + " refused");
  return std::make_unique<FdLineChannel>(fd, fd);
}

}  // namespace

std::unique_ptr<LineChannel> connect_channel(const std::string& address) {
  if (address.starts_with("unix:")) return connect_unix(address.substr(5));
  if (address.starts_with("exec:")) return spawn_process(address.substr(5));
  std::string hostport = address.starts_with("tcp:") ? address.substr(4) : address;
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == hostport.size()) {
    fail(ErrorCode::kInvalidArgument, "segmenter address must be unix:/path, exec:cmd or host:port");
  }
  return connect_tcp(hostport.substr(0, colon), hostport.substr(colon + 1));
}

ExternalSegmenter::ExternalSegmenter(std::string address, int connect_attempts)
    : address_(std::move(address)), connect_attempts_(std::max(connect_attempts, 1)) {}

ExternalSegmenter::ExternalSegmenter(std::unique_ptr<LineChannel> channel)
    : channel_(std::move(channel)) {}

LineChannel& ExternalSegmenter::channel() {
  if (channel_) return *channel_;
  if (address_.empty()) fail(ErrorCode::kBackendUnavailable, "channel closed");
  for (int attempt = 1;; ++attempt) {
    try {
      channel_ = connect_channel(address_);
      return *channel_;
    } catch (const MatcherError& e) {
      if (!e.retryable() || attempt >= connect_attempts_) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
    }
  }
}

SegmentResponse ExternalSegmenter::segment(const SegmentRequest& request) {
  auto& ch = channel();
  std::optional<std::string> line;
  try {
    ch.write_line(request_to_json(request).dump());
    line = ch.read_line();
  } catch (const MatcherError& e) {
    if (e.retryable()) channel_.reset();
    throw;
  }
  if (!line) {
    channel_.reset();
    fail(ErrorCode::kBackendUnavailable, "segmenter closed the connection");
  }
  json j;
  try {
    j = json::parse(*line);
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("unparsable response: ") + e.what());
  }
  return response_from_json(j);
}

void serve_segmenter(Segmenter& backend, LineChannel& channel) {
  while (auto line = channel.read_line()) {
    if (line->empty()) continue;
    json reply;
    try {
      reply = response_to_json(backend.segment(request_from_json(json::parse(*line))));
    } catch (const json::exception& e) {
      reply = error_to_json(ErrorCode::kProtocolError, e.what());
    } catch (const MatcherError& e) {
      reply = error_to_json(e.code(), e.what());
    }
    channel.write_line(reply.dump());
  }
}

}  // namespace matcher
