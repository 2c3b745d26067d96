#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "azprobe/network.hpp"

using namespace azprobe;
using namespace azprobe::network;
using chess::parse_fen;
using chess::start_position;

namespace {

/// Direct nested-loop evaluation used as an oracle for the im2col forward pass.
std::vector<double> naive_conv(const Conv& cv, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(cv.out * 64), 0.0);
  const int half = cv.kernel / 2;
  for (int o = 0; o < cv.out; ++o)
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        double acc = 0;
        for (int i = 0; i < cv.in; ++i)
          for (int ky = 0; ky < cv.kernel; ++ky)
            for (int kx = 0; kx < cv.kernel; ++kx) {
              const int sr = r + ky - half, sc = c + kx - half;
              if (sr < 0 || sr > 7 || sc < 0 || sc > 7) continue;
              acc += static_cast<double>(cv.weight[static_cast<std::size_t>(((o * cv.in + i) * cv.kernel + ky) * cv.kernel + kx)]) *
                     x[static_cast<std::size_t>((i * 8 + sr) * 8 + sc)];
            }
        y[static_cast<std::size_t>((o * 8 + r) * 8 + c)] =
            acc * cv.scale[static_cast<std::size_t>(o)] + cv.bias[static_cast<std::size_t>(o)];
      }
  return y;
}

struct NaiveResult {
  std::vector<std::vector<double>> layers;
  std::vector<double> policy;
  double value;
};

NaiveResult naive_forward(const Checkpoint& ck, const encoding::InputTensor& x) {
  const double clip = ck.config.clip_max;
  auto rc = [&](double v) { return std::min(std::max(v, 0.0), clip); };
  NaiveResult out;
  std::vector<double> in(x.data.begin(), x.data.end());
  auto z = naive_conv(ck.input, in);
  for (auto& v : z) v = rc(v);
  out.layers.push_back(z);
  for (const auto& b : ck.blocks) {
    auto h = naive_conv(b.a, z);
    for (auto& v : h) v = std::max(v, 0.0);
    const auto g = naive_conv(b.b, h);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = rc(z[i] + g[i]);
    out.layers.push_back(z);
  }
  out.policy = naive_conv(ck.policy, z);
  const auto vp = naive_conv(ck.value, z);
  double acc = ck.fc2_bias;
  for (int j = 0; j < ck.config.value_hidden; ++j) {
    double h = ck.fc1_bias[static_cast<std::size_t>(j)];
    for (int s = 0; s < 64; ++s) h += ck.fc1_weight[static_cast<std::size_t>(j * 64 + s)] * std::max(vp[static_cast<std::size_t>(s)], 0.0);
    acc += ck.fc2_weight[static_cast<std::size_t>(j)] * std::max(h, 0.0);
  }
  out.value = std::tanh(acc);
  return out;
}

NetworkConfig small() {
  NetworkConfig c;
  c.blocks = 3;
  c.channels = 6;
  c.history = 1;
  c.value_hidden = 16;
  return c;
}

std::string bytes_of(const Checkpoint& ck) {
  std::ostringstream s;
  write_checkpoint(s, ck);
  return s.str();
}

constexpr int mover_pawn = 5;
constexpr int opponent_pawn = 11;

}  // namespace

TEST(Network, ZeroCheckpointGivesZeroEverything) {
  const auto ck = zero_checkpoint(NetworkConfig{});
  const auto [out, acts] = forward(ck, encoding::encode_input(start_position(), ck.config.encoding()));
  EXPECT_EQ(out.value, 0.0);
  ASSERT_EQ(acts.layers.size(), 4u);
  for (const auto& l : acts.layers)
    for (float v : l) ASSERT_EQ(v, 0.0f);
  for (float v : out.policy) ASSERT_EQ(v, 0.0f);
}

TEST(Network, MatchesNaiveForward) {
  const auto ck = random_checkpoint(small(), 3, 2.0);
  for (const char* fen : {"rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1",
                          "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"}) {
    const auto x = encoding::encode_input(parse_fen(fen), ck.config.encoding());
    const auto [out, acts] = forward(ck, x);
    const auto ref = naive_forward(ck, x);
    for (std::size_t l = 0; l < ref.layers.size(); ++l)
      for (std::size_t i = 0; i < ref.layers[l].size(); ++i)
        ASSERT_NEAR(acts.layers[l][i], ref.layers[l][i], 1e-4 * (1 + std::abs(ref.layers[l][i])));
    for (std::size_t i = 0; i < ref.policy.size(); ++i)
      ASSERT_NEAR(out.policy[i], ref.policy[i], 1e-4 * (1 + std::abs(ref.policy[i])));
    EXPECT_NEAR(out.value, ref.value, 1e-5);
  }
}

TEST(Network, ActivationsStayInClipRangeAndAreDeterministic) {
  const auto ck = random_checkpoint(NetworkConfig{}, 11, 4.0);
  const auto x = encoding::encode_input(start_position(), ck.config.encoding());
  const auto [o1, a1] = forward(ck, x);
  const auto [o2, a2] = forward(ck, x);
  EXPECT_EQ(a1.layers, a2.layers);
  EXPECT_EQ(o1.policy, o2.policy);
  EXPECT_EQ(o1.value, o2.value);
  EXPECT_TRUE(std::isfinite(o1.value));
  EXPECT_GT(o1.value, -1.0);
  EXPECT_LT(o1.value, 1.0);
  for (const auto& l : a1.layers)
    for (float v : l) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 15.0f);
    }
}

TEST(Network, RandomCheckpointSeeding) {
  EXPECT_EQ(bytes_of(random_checkpoint(small(), 5, 1.0)), bytes_of(random_checkpoint(small(), 5, 1.0)));
  const auto x = encoding::encode_input(start_position(), small().encoding());
  EXPECT_NE(forward(random_checkpoint(small(), 5, 1.0), x).first.policy,
            forward(random_checkpoint(small(), 6, 1.0), x).first.policy);
  EXPECT_THROW(random_checkpoint(small(), 5, 0.0), std::invalid_argument);
}

TEST(Network, IdentityResidualKeepsFirstLayer) {
  auto ck = random_checkpoint(NetworkConfig{}, 2, 3.0);
  for (auto& b : ck.blocks) {
    std::fill(b.b.weight.begin(), b.b.weight.end(), 0.0f);
    std::fill(b.b.bias.begin(), b.b.bias.end(), 0.0f);
  }
  const auto [out, acts] = forward(ck, encoding::encode_input(parse_fen("8/5k2/8/3Pp3/8/8/2K5/8 w - e6 0 40"), ck.config.encoding()));
  (void)out;
  for (std::size_t l = 1; l < acts.layers.size(); ++l) EXPECT_EQ(acts.layers[l], acts.layers[0]);
}

TEST(Network, PlantedPawnChannelPersists) {
  NetworkConfig cfg;
  const auto ck = plant_linear_feature(cfg, 3, {{mover_pawn, 1.0f}}, 0.0f);
  for (const char* fen : {chess::start_fen.data(), "8/5k2/8/3Pp3/8/8/2K5/8 b - - 0 40"}) {
    const auto pos = parse_fen(fen);
    const auto x = encoding::encode_input(pos, cfg.encoding());
    const auto [out, acts] = forward(ck, x);
    for (int l = 1; l <= cfg.blocks; ++l)
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
          ASSERT_EQ(acts.at(l, r, c, 3), x.at(mover_pawn, r, c));
          ASSERT_EQ(acts.at(l, r, c, 0), 0.0f);
        }
  }
}

TEST(Network, PlantedPawnDifferenceWithOffset) {
  NetworkConfig cfg;
  auto ck = plant_linear_feature(cfg, 0, {{mover_pawn, 1.0f}, {opponent_pawn, -1.0f}}, 8.0f);
  add_planted_channel(ck, 1, {{mover_pawn, 2.0f}}, 0.0f);
  const auto [out, acts] = forward(ck, encoding::encode_input(start_position(), cfg.encoding()));
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const float want = r == 1 ? 9.0f : r == 6 ? 7.0f : 8.0f;
      EXPECT_EQ(acts.at(cfg.blocks, r, c, 0), want);
      EXPECT_EQ(acts.at(cfg.blocks, r, c, 1), r == 1 ? 2.0f : 0.0f);
    }
}

TEST(Network, PlantedFeatureIgnoresDistantSquares) {
  NetworkConfig cfg;
  const auto ck = plant_linear_feature(cfg, 2, {{mover_pawn, 1.5f}, {0, 0.5f}}, 1.0f);
  const auto a = forward(ck, encoding::encode_input(parse_fen("4k3/8/8/8/8/8/3PP3/4K3 w - - 0 1"), cfg.encoding())).second;
  const auto b = forward(ck, encoding::encode_input(parse_fen("4k3/8/8/8/8/7P/3PP3/4K3 w - - 0 1"), cfg.encoding())).second;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      if (r == 2 && c == 7) {
        EXPECT_NE(a.at(4, r, c, 2), b.at(4, r, c, 2));
        continue;
      }
      EXPECT_EQ(a.at(4, r, c, 2), b.at(4, r, c, 2));
    }
}

TEST(Network, PlantedValueHead) {
  NetworkConfig cfg;
  auto ck = plant_linear_feature(cfg, 0, {{mover_pawn, 0.5f}, {opponent_pawn, -0.5f}}, 0.5f);
  plant_value_head(ck, 0, 0.5f, 0.25f);
  // Two extra mover pawns: sum over squares = 64 * 0.5 + 2 * 0.5.
  const auto pos = parse_fen("4k3/pp6/8/8/8/8/PPPP4/4K3 w - - 0 1");
  const auto v = forward(ck, encoding::encode_input(pos, cfg.encoding())).first.value;
  EXPECT_NEAR(v, std::tanh(0.25 * 1.0), 1e-7);
  const auto black = forward(ck, encoding::encode_input(parse_fen("4k3/pp6/8/8/8/8/PPPP4/4K3 b - - 0 1"), cfg.encoding())).first.value;
  EXPECT_NEAR(black, -std::tanh(0.25), 1e-7);
}

TEST(Network, ShapeMismatchThrows) {
  const auto ck = zero_checkpoint(NetworkConfig{});
  EXPECT_THROW(forward(ck, encoding::encode_input(start_position(), encoding::EncodingParams{8})), ShapeError);
}

TEST(Checkpoint, FileSizeMatchesLayout) {
  // L=4, C=32, h=1 (21 input planes), hidden 256:
  //   in conv 32*21*9 + 2*32, 3 blocks * 2 convs * (32*32*9 + 64), policy 73*32*9 + 146,
  //   value 32 + 2, fc1 256*64 + 256, fc2 256 + 1; header 44 bytes.
  const std::uint64_t params = (6048 + 64) + 6 * (9216 + 64) + (21024 + 146) + 34 + 16640 + 257;
  const std::uint64_t expected = 44 + 4 * params;
  EXPECT_EQ(expected, 399616u);
  const auto ck = random_checkpoint(NetworkConfig{}, 1, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "azprobe_size_test.azpw";
  save_checkpoint(ck, path);
  EXPECT_EQ(std::filesystem::file_size(path), expected);
  EXPECT_EQ(checkpoint_file_size(ck.config), expected);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  auto ck = random_checkpoint(small(), 9, 1.5, 4242);
  ck.config.halfmove_divisor = 50.0f;
  const auto path = std::filesystem::temp_directory_path() / "azprobe_rt_test.azpw";
  save_checkpoint(ck, path);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(back.step, 4242u);
  EXPECT_EQ(bytes_of(back), bytes_of(ck));
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  const auto good = bytes_of(random_checkpoint(small(), 9, 1.0));
  auto expect_kind = [](const std::string& data, CheckpointErrorKind kind) {
    std::istringstream in(data);
    try {
      read_checkpoint(in);
      ADD_FAILURE() << "no error";
    } catch (const CheckpointError& e) {
      EXPECT_EQ(e.kind, kind) << e.what();
    }
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_kind(bad_magic, CheckpointErrorKind::magic);
  auto bad_version = good;
  bad_version[4] = 2;
  expect_kind(bad_version, CheckpointErrorKind::version);
  expect_kind(good.substr(0, good.size() - 3), CheckpointErrorKind::truncated);
  expect_kind(good.substr(0, 10), CheckpointErrorKind::truncated);
  auto bad_shape = good;
  bad_shape[8] = 0;  // L = 0
  expect_kind(bad_shape, CheckpointErrorKind::shape);
  expect_kind(good + "xx", CheckpointErrorKind::shape);
  EXPECT_THROW(load_checkpoint("/nonexistent/ck.azpw"), CheckpointError);
}
