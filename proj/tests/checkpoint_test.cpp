#include <gtest/gtest.h>

#include "hrgc/neural/checkpoint.hpp"
#include "test_support.hpp"

namespace hrgc::nn {
namespace {

HybridModel trained_like(std::uint64_t seed) {
  Architecture a;
  a.d_model = 8;
  a.lstm_hidden = 6;
  a.num_heads = 2;
  a.ff_width = 10;
  a.num_blocks = 2;
  HybridModel m = init_model(a, seed);
  std::vector<PairedSample> s{testing::toy_sample(seed, 0, 20)};
  m.norm = compute_normalization(s);
  return m;
}

TEST(Base64, KnownVectors) {
  auto enc = [](std::string s) { return base64::encode(std::vector<std::uint8_t>(s.begin(), s.end())); };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  auto dec = base64::decode("Zm9vYg==");
  EXPECT_EQ(std::string(dec.begin(), dec.end()), "foob");
  EXPECT_THROW(base64::decode("Zm9"), ParseError);
  EXPECT_THROW(base64::decode("Zm=v"), ParseError);
}

TEST(Doubles, LittleEndianBitExact) {
  // 1.0 is 0x3FF0000000000000.
  EXPECT_EQ(encode_doubles({1.0}), "AAAAAAAA8D8=");
  std::vector<double> v{0.0, -0.0, 1e-310, 3.141592653589793, -2.5e300, std::numeric_limits<double>::denorm_min()};
  auto back = decode_doubles(encode_doubles(v));
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(v[i]));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (std::uint64_t seed : {1u, 2u}) {
    HybridModel m = trained_like(seed);
    const std::string text = save_checkpoint(m);
    HybridModel back = load_checkpoint(text);
    EXPECT_EQ(back.arch, m.arch);
    EXPECT_EQ(back.norm, m.norm);
    EXPECT_EQ(save_checkpoint(back), text);
    auto s = testing::toy_sample(seed, 3, 25);
    EXPECT_EQ(predict(back, s.input), predict(m, s.input));
  }
}

TEST(Checkpoint, RejectsMalformedDocuments) {
  HybridModel m = trained_like(1);
  auto j = checkpoint_json(m);
  EXPECT_THROW(load_checkpoint("not json"), ParseError);

  auto bad_format = j;
  bad_format["format"] = "something-else";
  EXPECT_THROW(load_checkpoint(bad_format.dump()), ParseError);

  auto bad_version = j;
  bad_version["version"] = 99;
  EXPECT_THROW(load_checkpoint(bad_version.dump()), ParseError);

  auto bad_shape = j;
  bad_shape["parameters"]["fusion.W"]["shape"] = {3, 1};
  EXPECT_THROW(load_checkpoint(bad_shape.dump()), ParseError);

  auto missing = j;
  missing["parameters"].erase("embed.b");
  EXPECT_THROW(load_checkpoint(missing.dump()), ParseError);

  auto bad_arch = j;
  bad_arch["architecture"]["num_heads"] = 3;
  EXPECT_THROW(load_checkpoint(bad_arch.dump()), ParseError);

  try {
    auto truncated = j;
    truncated["parameters"]["lstm.W_o"]["data"] = encode_doubles({1.0, 2.0});
    load_checkpoint(truncated.dump(), "model.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), "lstm.W_o");
    EXPECT_EQ(e.source(), "model.json");
  }
}

} // namespace
} // namespace hrgc::nn
