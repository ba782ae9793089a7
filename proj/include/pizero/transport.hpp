#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pizero::es {

/// Reliable, per-peer ordered delivery of opaque messages between the ranks
/// of a fixed world.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t rank() const = 0;
  virtual std::size_t world() const = 0;
  virtual void send(std::size_t peer, std::span<const std::byte> message) = 0;
  /// Next message from `peer`; throws TransportTimeout after `timeout`.
  virtual std::vector<std::byte> receive(std::size_t peer, std::chrono::milliseconds timeout) = 0;

  /// Bytes handed to the network (or channel) by this endpoint so far.
  std::uint64_t bytes_sent() const { return bytes_sent_; }

 protected:
  std::uint64_t bytes_sent_ = 0;
};

/// In-process channels connecting `world` endpoints, for tests and
/// single-machine runs. Endpoints may live on different threads.
class InProcessHub {
 public:
  explicit InProcessHub(std::size_t world);
  ~InProcessHub();
  std::unique_ptr<Transport> endpoint(std::size_t rank);

  struct Shared;

 private:
  std::shared_ptr<Shared> shared_;
};

/// Listening socket, bound before the mesh is formed so port 0 can be used.
class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&&) = delete;
  TcpListener(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  int release();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Full mesh of TCP connections. Every frame is a u32 little-endian length
/// followed by the message bytes.
class TcpTransport final : public Transport {
 public:
  /// `peers[r]` is "host:port" of rank r; `listener` must be bound to
  /// peers[rank]'s port. Lower ranks accept, higher ranks connect.
  TcpTransport(std::size_t rank, std::vector<std::string> peers, TcpListener listener,
               std::chrono::milliseconds connect_timeout);
  ~TcpTransport() override;

  std::size_t rank() const override { return rank_; }
  std::size_t world() const override { return peers_.size(); }
  void send(std::size_t peer, std::span<const std::byte> message) override;
  std::vector<std::byte> receive(std::size_t peer, std::chrono::milliseconds timeout) override;

 private:
  std::size_t rank_;
  std::vector<std::string> peers_;
  std::vector<int> sockets_;
};

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address);

/// Rank-ordered exchange of one payload per worker per generation. Rejects
/// duplicate and out-of-order messages.
class Allgather {
 public:
  Allgather(Transport& transport, std::chrono::milliseconds timeout);

  /// Returns every rank's payload, indexed by rank.
  std::vector<std::vector<double>> run(std::uint64_t generation,
                                       std::span<const double> payload);

 private:
  Transport& transport_;
  std::chrono::milliseconds timeout_;
  std::vector<std::optional<std::uint64_t>> last_generation_;
};

}  // namespace pizero::es
