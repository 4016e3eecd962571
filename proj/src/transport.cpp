#include "spikesonar/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>

namespace spikesonar {

const char* to_string(Node node) {
    switch (node) {
    case Node::Robot: return "robot";
    case Node::Bridge: return "bridge";
    case Node::Engine: return "engine";
    }
    return "?";
}

class HubPort final : public Transport {
public:
    HubPort(LoopbackHub& hub, Node self) : hub_(hub), self_(self) {}

    bool send(Node to, std::span<const std::uint8_t> bytes) override { return hub_.deliver(self_, to, bytes); }
    std::optional<wire::Bytes> receive() override { return hub_.take(self_); }

private:
    LoopbackHub& hub_;
    Node self_;
};

std::unique_ptr<Transport> LoopbackHub::attach(Node self) { return std::make_unique<HubPort>(*this, self); }

void LoopbackHub::set_reachable(Node node, bool reachable) {
    std::lock_guard lock(mutex_);
    boxes_[static_cast<std::size_t>(node)].reachable = reachable;
}

void LoopbackHub::set_drop_rule(DropRule rule) {
    std::lock_guard lock(mutex_);
    drop_ = std::move(rule);
}

std::size_t LoopbackHub::pending(Node node) const {
    std::lock_guard lock(mutex_);
    return boxes_[static_cast<std::size_t>(node)].queue.size();
}

bool LoopbackHub::deliver(Node from, Node to, std::span<const std::uint8_t> bytes) {
    std::lock_guard lock(mutex_);
    auto& box = boxes_[static_cast<std::size_t>(to)];
    if (!box.reachable) return false;
    // a dropped datagram still counts as sent, as with UDP
    if (drop_ && drop_(from, to, bytes)) return true;
    box.queue.emplace_back(bytes.begin(), bytes.end());
    return true;
}

std::optional<wire::Bytes> LoopbackHub::take(Node to) {
    std::lock_guard lock(mutex_);
    auto& box = boxes_[static_cast<std::size_t>(to)];
    if (box.queue.empty()) return std::nullopt;
    auto bytes = std::move(box.queue.front());
    box.queue.pop_front();
    return bytes;
}

UdpTransport::UdpTransport(Node self, std::uint16_t bind_port) : self_(self) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(bind_port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        throw std::runtime_error("bind " + std::string(to_string(self)) + " to port " + std::to_string(bind_port) +
                                 ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);

    const int flags = ::fcntl(fd_, F_GETFL, 0);
    ::fcntl(fd_, F_SETFL, flags | O_NONBLOCK);
}

UdpTransport::~UdpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

void UdpTransport::set_peer_port(Node peer, std::uint16_t port) { peers_[static_cast<std::size_t>(peer)] = port; }

bool UdpTransport::send(Node to, std::span<const std::uint8_t> bytes) {
    const auto port = peers_[static_cast<std::size_t>(to)];
    if (port == 0) return false;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    const auto sent =
        ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    return sent == static_cast<ssize_t>(bytes.size());
}

std::optional<wire::Bytes> UdpTransport::receive() {
    wire::Bytes buffer(512);
    const auto got = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (got < 0) return std::nullopt;
    buffer.resize(static_cast<std::size_t>(got));
    return buffer;
}

} // namespace spikesonar
