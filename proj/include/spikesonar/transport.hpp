#pragma once

#include "spikesonar/datagram.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>

namespace spikesonar {

enum class Node : std::uint8_t { Robot = 0, Bridge = 1, Engine = 2 };

inline constexpr std::size_t kNodeCount = 3;

const char* to_string(Node node);

/// Datagram link seen from one endpoint. Implementations are not required to
/// be shared between threads; each endpoint owns its own transport.
class Transport {
public:
    virtual ~Transport() = default;

    /// False when the peer is unreachable; the datagram is not queued.
    virtual bool send(Node to, std::span<const std::uint8_t> bytes) = 0;

    /// Next pending datagram, never blocks.
    virtual std::optional<wire::Bytes> receive() = 0;
};

/// In-memory datagram switch. Delivery is immediate and in order; a sent
/// datagram becomes visible to the recipient's next receive().
class LoopbackHub {
public:
    /// Returns true to drop a datagram in flight (loss injection).
    using DropRule = std::function<bool(Node from, Node to, std::span<const std::uint8_t>)>;

    std::unique_ptr<Transport> attach(Node self);

    void set_reachable(Node node, bool reachable);
    void set_drop_rule(DropRule rule);
    std::size_t pending(Node node) const;

private:
    friend class HubPort;

    bool deliver(Node from, Node to, std::span<const std::uint8_t> bytes);
    std::optional<wire::Bytes> take(Node to);

    struct Mailbox {
        std::deque<wire::Bytes> queue;
        bool reachable = true;
    };

    mutable std::mutex mutex_;
    std::array<Mailbox, kNodeCount> boxes_;
    DropRule drop_;
};

/// UDP on 127.0.0.1. Port 0 binds an ephemeral port; peers can be set after
/// construction.
class UdpTransport final : public Transport {
public:
    UdpTransport(Node self, std::uint16_t bind_port);
    ~UdpTransport() override;

    UdpTransport(const UdpTransport&) = delete;
    UdpTransport& operator=(const UdpTransport&) = delete;

    void set_peer_port(Node peer, std::uint16_t port);
    std::uint16_t bound_port() const { return bound_port_; }

    bool send(Node to, std::span<const std::uint8_t> bytes) override;
    std::optional<wire::Bytes> receive() override;

private:
    Node self_;
    int fd_ = -1;
    std::uint16_t bound_port_ = 0;
    std::array<std::uint16_t, kNodeCount> peers_{};
};

} // namespace spikesonar
