#include <gtest/gtest.h>

#include <cstring>

#include "mde/checkpoint.hpp"
#include "test_util.hpp"

namespace mde {
namespace {

Vocabulary small_vocab() {
  Vocabulary v;
  for (const char* e : {"alpha", "beta", "gamma", "δέλτα"}) v.add_entity(e);
  for (const char* r : {"likes", "owns"}) v.add_relation(r);
  return v;
}

TEST(Checkpoint, RoundTripWithTrainingState) {
  testing::TempDir dir;
  for (bool term4 : {false, true}) {
    const Vocabulary vocab = small_vocab();
    auto e = init_embeddings<float>(vocab, 5, 11, term4);
    ScoreConfig c;
    c.term4 = term4;
    c.p = 2;
    if (term4) c.weights[3] = 0.3;
    TrainingState st;
    st.epoch = 42;
    st.loss.delta = 0.3;
    st.loss.delta_prime = -0.2;
    st.loss.beta1 = 5;
    st.optimizer.lr = 3;
    st.optimizer.slots[{Kind::kRelation, Family::kK, 1}] = {
        {1, 2, 3, 4, 5}, {0.5, 0.25, 0.125, 0, 1e-300}};
    st.optimizer.slots[{Kind::kEntity, Family::kI, 3}] = {
        {9, 8, 7, 6, 5}, {1, 1, 1, 1, 1}};
    const std::string path = dir.file("m.ckpt");
    save_checkpoint(path, e, vocab, c, &st);
    const Checkpoint ck = load_checkpoint(path);
    EXPECT_EQ(ck.embeddings, e);
    EXPECT_EQ(ck.vocab, vocab);
    EXPECT_EQ(ck.config, c);
    ASSERT_TRUE(ck.state.has_value());
    EXPECT_EQ(ck.state->epoch, 42u);
    EXPECT_EQ(ck.state->loss, st.loss);
    EXPECT_EQ(ck.state->optimizer.lr, 3.0);
    EXPECT_EQ(ck.state->optimizer.slots.size(), 2u);
    for (const auto& [key, slot] : st.optimizer.slots) {
      const auto* got = ck.state->optimizer.find(key);
      ASSERT_NE(got, nullptr);
      EXPECT_EQ(got->sq_grad, slot.sq_grad);
      EXPECT_EQ(got->sq_delta, slot.sq_delta);
    }
  }
}

TEST(Checkpoint, ModelOnlyHasNoState) {
  testing::TempDir dir;
  const Vocabulary vocab = small_vocab();
  auto e = init_embeddings<float>(vocab, 3, 2, false);
  save_checkpoint(dir.file("m.ckpt"), e, vocab, ScoreConfig{});
  const auto ck = load_checkpoint(dir.file("m.ckpt"));
  EXPECT_FALSE(ck.state.has_value());
  EXPECT_EQ(ck.embeddings, e);
}

TEST(Checkpoint, SavingIsDeterministic) {
  testing::TempDir dir;
  const Vocabulary vocab = small_vocab();
  auto e = init_embeddings<float>(vocab, 4, 9, false);
  save_checkpoint(dir.file("a"), e, vocab, ScoreConfig{});
  save_checkpoint(dir.file("b"), e, vocab, ScoreConfig{});
  EXPECT_EQ(testing::read_file(dir.file("a")), testing::read_file(dir.file("b")));
  EXPECT_FALSE(std::filesystem::exists(dir.file("a.tmp")));
}

class CorruptCheckpoint : public ::testing::Test {
 protected:
  void SetUp() override {
    const Vocabulary vocab = small_vocab();
    save_checkpoint(dir_.file("m.ckpt"), init_embeddings<float>(vocab, 3, 1, false),
                    vocab, ScoreConfig{});
    bytes_ = testing::read_file(dir_.file("m.ckpt"));
  }
  std::string write(const std::string& bytes) {
    testing::write_file(dir_.file("bad.ckpt"), bytes);
    return dir_.file("bad.ckpt");
  }
  std::string message_of(const std::string& path) {
    try {
      load_checkpoint(path);
    } catch (const DataError& e) {
      EXPECT_EQ(e.code(), ExitCode::kData);
      return e.what();
    }
    ADD_FAILURE() << "no DataError for " << path;
    return {};
  }
  testing::TempDir dir_;
  std::string bytes_;
};

TEST_F(CorruptCheckpoint, BadMagic) {
  std::string b = bytes_;
  b[0] = 'X';
  EXPECT_NE(message_of(write(b)).find("magic"), std::string::npos);
}

TEST_F(CorruptCheckpoint, UnsupportedVersion) {
  std::string b = bytes_;
  const std::uint32_t v = 7;
  std::memcpy(b.data() + 8, &v, 4);
  EXPECT_NE(message_of(write(b)).find("version 7"), std::string::npos);
}

TEST_F(CorruptCheckpoint, Truncated) {
  for (std::size_t keep : {std::size_t{4}, std::size_t{20}, bytes_.size() / 2,
                           bytes_.size() - 1}) {
    message_of(write(bytes_.substr(0, keep)));
  }
}

TEST_F(CorruptCheckpoint, BadFamilyMask) {
  std::string b = bytes_;
  const std::uint32_t mask = 0b0011;
  std::memcpy(b.data() + 32, &mask, 4);
  EXPECT_NE(message_of(write(b)).find("corrupt"), std::string::npos);
}

TEST_F(CorruptCheckpoint, MissingFile) {
  message_of(dir_.file("absent.ckpt"));
}

}  // namespace
}  // namespace mde
