#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "adapedit/backend.hpp"
#include "adapedit/transport.hpp"

namespace adapedit {

/// Client side of the wire protocol. Each init() opens a fresh connection
/// (one session per connection); injection happens host-side.
class RemoteBackend final : public DiffusionBackend {
public:
    using Connector = std::function<std::unique_ptr<ByteStream>()>;

    explicit RemoteBackend(std::string endpoint);
    explicit RemoteBackend(Connector connector);
    ~RemoteBackend() override;

    Vocabulary vocabulary() const override;
    SessionInfo init(const SessionParams& params) override;
    StepOutput step(int t, Branch branch, std::span<const LayerMaps> injected) override;
    Image decode(Branch branch) override;
    void close() override;

    // Raw PNG bytes of the last decode() call.
    const std::vector<std::uint8_t>& last_png() const noexcept { return last_png_; }

private:
    wire::Client& client();

    Connector connector_;
    std::optional<wire::Client> client_;
    std::array<int, 2> last_step_{0, 0};
    std::vector<std::uint8_t> last_png_;
};

}  // namespace adapedit
