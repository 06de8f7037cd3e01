#include <gtest/gtest.h>

#include "adapedit/controller.hpp"
#include "adapedit/errors.hpp"
#include "adapedit/remote_backend.hpp"
#include "adapedit/toy_backend.hpp"
#include "loopback_host.hpp"

using namespace adapedit;
using adapedit::testing::LoopbackHost;

namespace {

EditConfig job(int steps) {
    EditConfig cfg;
    cfg.prompt = "a dog standing on the grass";
    cfg.edit = "a dog sitting on the grass";
    cfg.steps = steps;
    return cfg;
}

}  // namespace

TEST(RemoteBackendTest, StepsMatchTheDirectToyBackend) {
    LoopbackHost host;
    RemoteBackend remote(host.endpoint());
    ToyBackend direct;
    const SessionParams p{3, 7.5f, 11, "a cat on a mat", "a dog on a mat", ""};
    EXPECT_EQ(remote.init(p).layers, direct.init(p).layers);
    for (int t = 3; t >= 1; --t) {
        for (Branch b : {Branch::Source, Branch::Edit}) {
            const StepOutput r = remote.step(t, b, {});
            const StepOutput d = direct.step(t, b, {});
            EXPECT_EQ(r.noise_pred, d.noise_pred);
            EXPECT_EQ(r.maps, d.maps);
            EXPECT_EQ(r.features, d.features);
        }
    }
    EXPECT_EQ(remote.decode(Branch::Edit), direct.decode(Branch::Edit));
    remote.close();
}

TEST(RemoteBackendTest, FullEditMatchesTheDirectPath) {
    LoopbackHost host;
    RemoteBackend remote(host.endpoint());
    ToyBackend direct;
    const EditConfig cfg = job(8);
    const EditResult r = run_edit(cfg, remote);
    const EditResult d = run_edit(cfg, direct);
    EXPECT_EQ(r.x, d.x);
    EXPECT_EQ(r.x_star, d.x_star);
    EXPECT_EQ(r.map_divergence, d.map_divergence);
    EXPECT_GT(r.map_divergence, 0.0);
    remote.close();
    EXPECT_EQ(host.sessions(), 2);
}

TEST(RemoteBackendTest, HostErrorsSurfaceWithTheirStep) {
    LoopbackHost host;
    RemoteBackend remote(host.endpoint());
    remote.init({2, 7.5f, 0, "a cat", "a dog", ""});
    const std::vector<LayerMaps> unknown = {{7, {Matrix(4, 1024, 0.25f)}}};
    try {
        remote.step(2, Branch::Edit, unknown);
        ADD_FAILURE() << "step succeeded";
    } catch (const BackendError& e) {
        EXPECT_EQ(e.step(), 2);
        EXPECT_NE(std::string(e.what()).find("error 2"), std::string::npos);
    }
    try {
        remote.step(1, Branch::Edit, {});
        ADD_FAILURE() << "out-of-order step succeeded";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("error 4"), std::string::npos);
    }
    EXPECT_EQ(host.errors_sent(), 2);
}

TEST(RemoteBackendTest, UnreachableHost) {
    std::string endpoint;
    {
        LoopbackHost gone;
        endpoint = gone.endpoint();
    }
    RemoteBackend remote(endpoint);
    EXPECT_THROW(remote.init({1, 7.5f, 0, "a", "b", ""}), BackendUnavailable);
    EXPECT_THROW(remote.step(1, Branch::Source, {}), StateError);
}

TEST(RemoteBackendTest, MakeBackendSelectsByConfig) {
    EditConfig cfg = job(2);
    EXPECT_NE(dynamic_cast<ToyBackend*>(make_backend(cfg).get()), nullptr);
    cfg.backend = "remote:127.0.0.1:9";
    EXPECT_NE(dynamic_cast<RemoteBackend*>(make_backend(cfg).get()), nullptr);
}
