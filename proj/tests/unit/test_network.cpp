#include "radekit/error.hpp"
#include "radekit/layers.hpp"
#include "radekit/network.hpp"
#include "radekit/random.hpp"

#include "../support/test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <thread>

using namespace radekit;
using namespace radekit::nn;

namespace {

NetworkConfig tiny_config()
{
    NetworkConfig c;
    c.n_de = 4;
    c.n_d = 2;
    c.n_r = 16;
    c.n_a_pad = 8;
    c.use_cbam = false;
    c.seed = 3;
    return c;
}

NetworkConfig small_config()
{
    NetworkConfig c;
    c.n_de = 16;
    c.n_d = 10;
    c.n_r = 16;
    c.n_a_pad = 16;
    c.seed = 5;
    return c;
}

FeatureMap random_map(std::uint32_t c, std::uint32_t h, std::uint32_t w, Rng& rng, double lo = 0.0, double hi = 1.0)
{
    FeatureMap m(c, h, w);
    for (float& v : m.data) {
        v = static_cast<float>(rng.uniform(lo, hi));
    }
    return m;
}

float silu(float x)
{
    return x / (1.0f + std::exp(-x));
}

void zero_params(Network& net, const std::string& prefix)
{
    net.for_each_param([&](ParamRef ref) {
        if (ref.path.rfind(prefix, 0) == 0) {
            std::fill(ref.values->begin(), ref.values->end(), 0.0f);
        }
    });
}

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k)
{
    return in * out * k * k + out;
}

// Parameter count implied by the architecture description, independent of the
// layer bookkeeping in the implementation.
std::size_t expected_parameters(const NetworkConfig& c)
{
    const auto ch = [&](int s) { return std::size_t{c.n_de} << (s - 1); };
    const std::size_t f = c.feature_dim();
    std::size_t n = 0;
    if (c.use_input_stem) {
        n += conv_params(c.n_d, c.n_d, 3) + conv_params(c.n_de - c.n_d, c.n_de - c.n_d, 3);
    }
    for (int s = 2; s <= 4; ++s) {
        n += conv_params(ch(s - 1), ch(s), 3) + 2 * ch(s);
    }
    if (c.use_cbam) {
        for (int s = 1; s <= 3; ++s) {
            const std::size_t hidden = ch(s) / c.cbam_reduction;
            n += hidden * ch(s) + hidden + ch(s) * hidden + ch(s) + conv_params(2, 1, 7);
        }
    }
    for (int s = 1; s <= 3; ++s) {
        const std::size_t out = s == 1 ? f : ch(s);
        n += ch(s + 1) * ch(s) * 4 + ch(s);
        n += conv_params(2 * ch(s), out, 3) + 2 * out;
    }
    if (c.use_dilated_neck) {
        n += 6 * conv_params(f, f, 3);
    }
    if (c.use_expanded_heads) {
        n += 4 * conv_params(f, f, 3) + conv_params(f, c.n_cls, 3) + conv_params(f, 8, 3);
    } else {
        n += (f + 1) * (c.n_cls + 8);
    }
    return n;
}

}  // namespace

TEST_CASE("encoder stage shapes follow the halving rule")
{
    const Network net(tiny_config());
    Rng rng(1);
    const auto maps = net.encoder_forward(random_map(4, 16, 8, rng));
    const std::uint32_t expect[4][3] = {{4, 16, 8}, {8, 8, 4}, {16, 4, 2}, {32, 2, 1}};
    for (int s = 0; s < 4; ++s) {
        CHECK(maps[s].channels == expect[s][0]);
        CHECK(maps[s].height == expect[s][1]);
        CHECK(maps[s].width == expect[s][2]);
    }
}

TEST_CASE("zero input stays zero through the encoder")
{
    const Network net(tiny_config());
    const auto maps = net.encoder_forward(net.prepare_input(FeatureMap(4, 16, 8)));
    for (const FeatureMap& m : maps) {
        CHECK(std::all_of(m.data.begin(), m.data.end(), [](float v) { return v == 0.0f; }));
    }
}

TEST_CASE("network input is validated")
{
    const Network net(tiny_config());
    CHECK_THROWS_AS(net.encoder_forward(FeatureMap(3, 16, 8)), Error);
    CHECK_THROWS_AS(net.encoder_forward(FeatureMap(4, 12, 8)), Error);
    NetworkConfig bad = tiny_config();
    bad.n_r = 12;
    CHECK_THROWS_AS(Network{bad}, Error);
    bad = tiny_config();
    bad.use_cbam = true;  // 4 channels cannot feed a 16x bottleneck
    CHECK_THROWS_AS(Network{bad}, Error);
}

TEST_CASE("every toggle combination keeps the output contract")
{
    Rng rng(2);
    for (int mask = 0; mask < 32; ++mask) {
        NetworkConfig c = small_config();
        c.use_cbam = mask & 1;
        c.use_dilated_neck = mask & 2;
        c.use_expanded_heads = mask & 4;
        c.use_input_stem = mask & 8;
        c.use_feature_expansion = mask & 16;
        const Network net(c);
        CHECK(net.parameter_count() == expected_parameters(c));
        const FeatureMap input = random_map(16, 16, 16, rng);
        const FeatureMap backbone = net.decoder_forward(net.encoder_forward(net.prepare_input(input)));
        CHECK(backbone.channels == c.feature_dim());
        CHECK(backbone.height == 16);
        CHECK(backbone.width == 16);
        const FeatureMap neck = net.neck_forward(backbone);
        CHECK(neck.same_shape(backbone));
        const HeadOutputs out = net.heads_forward(neck);
        CHECK(out.n_cls == c.n_cls);
        CHECK(out.rows == 16);
        CHECK(out.cols == 16);
        CHECK(out.conf.size() == std::size_t{c.n_cls} * 256);
        CHECK(out.params.size() == 8u * 256);
        CHECK(std::all_of(out.conf.begin(), out.conf.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
        CHECK(std::all_of(out.params.begin(), out.params.end(), [](double v) { return std::isfinite(v); }));
    }
}

TEST_CASE("default configuration parameter count")
{
    const NetworkConfig c = NetworkConfig::for_geometry(SensorGeometry{}, 2);
    CHECK(c.n_de == 101);
    CHECK(c.n_r == 256);
    CHECK(c.n_a_pad == 112);
    CHECK(c.feature_dim() == 128);
    const Network net(c);
    CHECK(net.parameter_count() == expected_parameters(c));
    CHECK(net.parameter_count() == 10996638u);
}

TEST_CASE("baseline heads have (feature_dim + 1)(n_cls + 8) parameters")
{
    for (bool expand : {false, true}) {
        NetworkConfig c = small_config();
        c.use_expanded_heads = false;
        c.use_feature_expansion = expand;
        c.n_cls = 3;
        const Network net(c);
        CHECK(net.head_parameter_count() == (c.feature_dim() + 1) * (c.n_cls + 8));
    }
}

TEST_CASE("classification head starts from the prior bias")
{
    Network net(small_config());
    bool found = false;
    net.for_each_param([&](ParamRef ref) {
        if (ref.path == "head.cls.2.bias") {
            found = true;
            CHECK(std::all_of(ref.values->begin(), ref.values->end(), [](float v) { return v == -2.19f; }));
        }
    });
    CHECK(found);
}

TEST_CASE("group norm fallback uses the greatest divisor not above the request")
{
    CHECK(effective_groups(128, 32) == 32);
    CHECK(effective_groups(101, 32) == 1);
    CHECK(effective_groups(202, 32) == 2);
    CHECK(effective_groups(404, 32) == 4);
    CHECK(effective_groups(808, 32) == 8);
    CHECK(effective_groups(48, 32) == 24);
    CHECK(effective_groups(7, 32) == 7);
}

TEST_CASE("group normalization is invariant to scaling one group")
{
    Rng rng(9);
    const GroupNorm norm(64, 8);
    for (int trial = 0; trial < 50; ++trial) {
        const FeatureMap x = random_map(64, 6, 5, rng, -10.0, 10.0);
        FeatureMap y = x;
        const std::size_t group = rng.index(8);
        const double c = std::exp(rng.uniform(-5.0, 5.0));
        for (std::size_t ch = group * 8; ch < group * 8 + 8; ++ch) {
            for (std::size_t i = 0; i < y.plane(); ++i) {
                y.channel(ch)[i] = static_cast<float>(y.channel(ch)[i] * c);
            }
        }
        FeatureMap nx = x, ny = y;
        norm.normalize_inplace(nx);
        norm.normalize_inplace(ny);
        double worst = 0.0;
        for (std::size_t i = 0; i < nx.data.size(); ++i) {
            worst = std::max(worst, std::abs(double(nx.data[i]) - double(ny.data[i])));
        }
        REQUIRE(worst < 1e-5);
    }
}

TEST_CASE("group normalization yields zero mean and unit variance per group")
{
    Rng rng(10);
    const GroupNorm norm(12, 3);
    FeatureMap x = random_map(12, 7, 9, rng, -3.0, 5.0);
    norm.normalize_inplace(x);
    for (std::size_t g = 0; g < 3; ++g) {
        double sum = 0.0, sq = 0.0;
        const std::size_t n = 4 * x.plane();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x.data[g * n + i];
            sum += v;
            sq += v * v;
        }
        CHECK(sum / n == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
        CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("cbam gates lie strictly inside (0, 1) and never amplify")
{
    Rng rng(11);
    Network net(small_config());
    for (int trial = 0; trial < 50; ++trial) {
        const int stage = 1 + static_cast<int>(rng.index(3));
        const std::uint32_t ch = 16u << (stage - 1);
        const std::uint32_t side = 16u >> (stage - 1);
        const FeatureMap x = random_map(ch, side, side, rng, -20.0, 20.0);
        Cbam::Trace trace;
        const FeatureMap y = net.cbam(stage).forward(x, &trace);
        for (float g : trace.channel_gate) {
            REQUIRE(g > 0.0f);
            REQUIRE(g < 1.0f);
        }
        for (float g : trace.spatial_gate.data) {
            REQUIRE(g > 0.0f);
            REQUIRE(g < 1.0f);
        }
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            REQUIRE(std::abs(trace.after_channel.data[i]) <= std::abs(x.data[i]));
            REQUIRE(std::abs(y.data[i]) <= std::abs(trace.after_channel.data[i]));
        }
    }
}

TEST_CASE("cbam with zero weights scales its input by one quarter")
{
    Network net(small_config());
    zero_params(net, "skip.1");
    Rng rng(12);
    const FeatureMap x = random_map(16, 16, 16, rng, -5.0, 5.0);
    const FeatureMap y = net.cbam(1).forward(x);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        REQUIRE(y.data[i] == 0.25f * x.data[i]);
    }
}

TEST_CASE("cbam spatial gate is constant away from the border for constant input")
{
    const Network net(small_config());
    const FeatureMap x(32, 16, 16, 0.75f);
    Cbam::Trace trace;
    net.cbam(2).forward(x, &trace);
    const float centre = trace.spatial_gate.at(0, 8, 8);
    for (std::size_t y = 3; y < 13; ++y) {
        for (std::size_t z = 3; z < 13; ++z) {
            REQUIRE(trace.spatial_gate.at(0, y, z) == doctest::Approx(centre).epsilon(1e-6));
        }
    }
}

TEST_CASE("neck with zero weights applies SiLU three times")
{
    Network net(small_config());
    zero_params(net, "neck.");
    Rng rng(13);
    const FeatureMap x = random_map(128, 8, 8, rng, -4.0, 4.0);
    const FeatureMap y = net.neck_forward(x);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        REQUIRE(y.data[i] == doctest::Approx(silu(silu(silu(x.data[i])))).epsilon(1e-6));
    }
}

TEST_CASE("neck receptive field matches the summed dilation reach")
{
    NetworkConfig c = small_config();
    c.seed = 21;
    const Network net(c);
    Rng rng(14);
    const FeatureMap x = random_map(128, 24, 24, rng, -1.0, 1.0);
    FeatureMap bumped = x;
    for (std::size_t ch = 0; ch < 128; ++ch) {
        bumped.at(ch, 12, 12) += 3.0f;
    }
    const FeatureMap a = net.neck_forward(x);
    const FeatureMap b = net.neck_forward(bumped);
    int reach = 0;
    for (std::size_t y = 0; y < 24; ++y) {
        for (std::size_t z = 0; z < 24; ++z) {
            bool differs = false;
            for (std::size_t ch = 0; ch < 128 && !differs; ++ch) {
                differs = a.at(ch, y, z) != b.at(ch, y, z);
            }
            if (differs) {
                const int dy = std::abs(static_cast<int>(y) - 12), dz = std::abs(static_cast<int>(z) - 12);
                reach = std::max({reach, dy, dz});
            }
        }
    }
    // Each 3x3 convolution extends the reach by its dilation on either side.
    int expected = 0;
    for (int k = 1; k <= 3; ++k) {
        expected += k + 1;
    }
    CHECK(reach == expected);
    CHECK(2 * reach == 18);
}

TEST_CASE("forward pass is deterministic and thread independent")
{
    const Network net(small_config());
    Rng rng(15);
    const FeatureMap x = random_map(16, 16, 16, rng);
    SensorGeometry g;
    g.n_r = 16;
    g.n_a = 16;
    g.n_d = 10;
    g.n_e = 6;
    std::vector<float> data = x.data;
    const RaProjection p(g, data);
    const HeadOutputs first = net.forward(p);
    HeadOutputs second, third;
    std::thread t1([&] { second = net.forward(p); });
    std::thread t2([&] { third = net.forward(p); });
    t1.join();
    t2.join();
    CHECK(first == second);
    CHECK(first == third);
}

TEST_CASE("seeded initialization is reproducible and seed dependent")
{
    NetworkConfig c = small_config();
    const Network a(c), b(c);
    CHECK(a.checkpoint() == b.checkpoint());
    c.seed += 1;
    const Network d(c);
    CHECK(!(a.checkpoint().blobs == d.checkpoint().blobs));
    CHECK(a.checkpoint().fingerprint == d.checkpoint().fingerprint);
}

TEST_CASE("checkpoint files round-trip and reproduce outputs bit for bit")
{
    test::TempDir dir;
    const NetworkConfig c = small_config();
    const Network net(c);
    save_checkpoint(dir / "net.rdn", net.checkpoint());
    const Checkpoint loaded = load_checkpoint(dir / "net.rdn");
    CHECK(loaded == net.checkpoint());
    NetworkConfig other_seed = c;
    other_seed.seed = 999;
    const Network restored(other_seed, loaded);

    Rng rng(16);
    SensorGeometry g;
    g.n_r = 16;
    g.n_a = 13;
    g.n_d = 10;
    g.n_e = 6;
    std::vector<float> data(16 * 16 * 16, 0.0f);
    for (std::size_t ch = 0; ch < 16; ++ch) {
        for (std::size_t r = 0; r < 16; ++r) {
            for (std::size_t a = 0; a < 13; ++a) {
                data[(ch * 16 + r) * 16 + a] = static_cast<float>(rng.uniform());
            }
        }
    }
    const RaProjection p(g, data);
    CHECK(net.forward(p) == restored.forward(p));
}

TEST_CASE("checkpoints are rejected when they do not fit the network")
{
    const NetworkConfig c = small_config();
    const Checkpoint ckpt = Network(c).checkpoint();

    NetworkConfig wide = c;
    wide.use_feature_expansion = true;
    CHECK_THROWS_AS(Network(wide, ckpt), Error);

    Checkpoint missing = ckpt;
    missing.blobs.pop_back();
    CHECK_THROWS_AS(Network(c, missing), Error);

    Checkpoint extra = ckpt;
    extra.blobs.push_back({"head.cls.9.weight", {1}, {0.0f}});
    CHECK_THROWS_AS(Network(c, extra), Error);

    Checkpoint duplicate = ckpt;
    duplicate.blobs.push_back(duplicate.blobs.front());
    CHECK_THROWS_AS(Network(c, duplicate), Error);

    Checkpoint misshaped = ckpt;
    misshaped.blobs.front().dims.back() += 1;
    CHECK_THROWS_AS(Network(c, misshaped), Error);

    test::TempDir dir;
    save_checkpoint(dir / "net.rdn", ckpt);
    std::string bytes = test::read_bytes(dir / "net.rdn");
    io::write_file_atomic(dir / "cut.rdn", bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(load_checkpoint(dir / "cut.rdn"), Error);
    bytes[0] = 'Q';
    io::write_file_atomic(dir / "magic.rdn", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir / "magic.rdn"), Error);
}

TEST_CASE("config fingerprint ignores the seed but not the architecture")
{
    NetworkConfig a = small_config(), b = small_config();
    b.seed = 1234;
    CHECK(a.fingerprint() == b.fingerprint());
    b.use_dilated_neck = false;
    CHECK(a.fingerprint() != b.fingerprint());
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}
