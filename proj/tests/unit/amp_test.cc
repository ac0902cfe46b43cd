#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "finite_difference.h"
#include "locolab/amp/amp.h"
#include "locolab/errors.h"
#include "locolab/motion/motion.h"
#include "locolab/sim/kinematics.h"

namespace locolab::amp {
namespace {

using ::locolab::testing::NumericGradient;
using ::locolab::testing::RelativeError;

Eigen::MatrixXd RandomMatrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.Normal();
  return m;
}

nn::Mlp TinyNet(Rng& rng) {
  nn::Mlp net(2, {8}, 1, nn::Activation::kTanh, nn::Activation::kIdentity);
  net.InitOrthogonal(rng, 1.0, 1.0);
  for (auto& layer : net.mutable_layers())
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      layer.bias[i] = 0.3 * rng.Normal();
  return net;
}

motion::MotionClip TrotClip(int frames, double rate = 50.0) {
  return motion::SynthGait(
      motion::GaitParams::Preset(motion::GaitLabel::kTrot, 0.6), frames, rate);
}

// Synthetic linearly separable pairs: label is the sign of w.x, with points
// inside the margin rejected.
struct Separable {
  Eigen::MatrixXd positive;
  Eigen::MatrixXd negative;
};

Eigen::VectorXd RandomDirection(Rng& rng) {
  Eigen::VectorXd w(kPairDim);
  for (int i = 0; i < kPairDim; ++i) w[i] = rng.Normal();
  return w.normalized();
}

Separable MakeSeparable(const Eigen::VectorXd& w, int n, Rng& rng) {
  std::vector<Eigen::VectorXd> pos, neg;
  while (static_cast<int>(pos.size()) < n || static_cast<int>(neg.size()) < n) {
    Eigen::VectorXd x(kPairDim);
    for (int i = 0; i < kPairDim; ++i) x[i] = rng.Normal();
    const double s = w.dot(x);
    if (s > 0.5 && static_cast<int>(pos.size()) < n) pos.push_back(x);
    if (s < -0.5 && static_cast<int>(neg.size()) < n) neg.push_back(x);
  }
  Separable out{Eigen::MatrixXd(kPairDim, n), Eigen::MatrixXd(kPairDim, n)};
  for (int i = 0; i < n; ++i) {
    out.positive.col(i) = pos[i];
    out.negative.col(i) = neg[i];
  }
  return out;
}

Eigen::MatrixXd Columns(const Eigen::MatrixXd& m, int start, int count) {
  return m.middleCols(start, count);
}

double SignAccuracy(const Discriminator& d, const Separable& s) {
  const Eigen::VectorXd dp = d.Evaluate(s.positive);
  const Eigen::VectorXd dn = d.Evaluate(s.negative);
  const int correct = static_cast<int>((dp.array() > 0.0).count() +
                                       (dn.array() < 0.0).count());
  return static_cast<double>(correct) / (dp.size() + dn.size());
}

TEST(AmpFeaturesTest, StandingPoseHasZeroVelocityFields) {
  const sim::RobotMorphology morph;
  sim::RobotState state;
  state.base_pos = {1.0, 0.27};
  state.joint_angles = sim::NominalJointAngles(morph);
  const Features f = AmpFeatures(state, morph, terrain::Terrain());
  EXPECT_TRUE(f.segment<8>(8).isZero(0.0));
  EXPECT_TRUE(f.segment<3>(17).isZero(0.0));
  EXPECT_DOUBLE_EQ(f[16], 0.27);
}

TEST(AmpFeaturesTest, RobotStateAndReferencePoseAgree) {
  const sim::RobotMorphology morph;
  const motion::MotionClip clip = TrotClip(20);
  for (const motion::ReferencePose& pose : clip.frames) {
    sim::RobotState state;
    state.base_pos = {2.0, pose.base_height};
    state.base_pitch = pose.base_pitch;
    state.base_lin_vel = {pose.base_forward_vel, pose.base_vertical_vel};
    state.base_pitch_rate = pose.base_pitch_rate;
    state.joint_angles = pose.joint_angles;
    state.joint_vels = pose.joint_vels;
    const Features a = AmpFeatures(state, morph, terrain::Terrain());
    const Features b = AmpFeatures(pose);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AmpFeaturesTest, HeightIsMeasuredAboveLocalGround) {
  const sim::RobotMorphology morph;
  const auto stairs =
      terrain::Terrain::Generate(terrain::TerrainKind::kStairs, 9, 1);
  sim::RobotState state;
  state.base_pos = {6.0, 0.9};
  const Features f = AmpFeatures(state, morph, stairs);
  EXPECT_DOUBLE_EQ(f[16], 0.9 - stairs.HeightAt(6.0));
}

TEST(AmpFeaturesTest, PitchRotatesBodyVelocity) {
  const sim::RobotMorphology morph;
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    sim::RobotState state;
    state.base_pos = {1.0, 0.3};
    state.base_pitch = rng.Uniform(-1.5, 1.5);
    state.base_lin_vel = {rng.Uniform(-2, 2), rng.Uniform(-2, 2)};
    // Body axes expressed in world coordinates; projections give the body
    // components.
    const double p = state.base_pitch;
    const Eigen::Vector2d ex(std::cos(p), std::sin(p));
    const Eigen::Vector2d ez(-std::sin(p), std::cos(p));
    const Features f = AmpFeatures(state, morph, terrain::Terrain());
    EXPECT_NEAR(f[17], ex.dot(state.base_lin_vel), 1e-12);
    EXPECT_NEAR(f[18], ez.dot(state.base_lin_vel), 1e-12);
  }
}

TEST(PairVectorTest, ConcatenatesInOrder) {
  Features a = Features::Constant(1.0);
  Features b = Features::Constant(2.0);
  const Eigen::VectorXd pair = PairVector(a, b);
  ASSERT_EQ(pair.size(), kPairDim);
  EXPECT_EQ(pair.head(kFeatureDim), a);
  EXPECT_EQ(pair.tail(kFeatureDim), b);
}

TEST(DiscLossTest, ClampedOptimumHasZeroPredictionTerms) {
  // D(x) = x on one-dimensional inputs; data sits at +1, policy at -1.
  nn::Mlp d({nn::Layer{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1),
                       nn::Activation::kIdentity}});
  const Eigen::MatrixXd data = Eigen::MatrixXd::Ones(1, 5);
  const Eigen::MatrixXd policy = -Eigen::MatrixXd::Ones(1, 7);
  const DiscLoss loss = DiscLossAndGrads(d, data, policy, 0.0);
  EXPECT_EQ(loss.data_term, 0.0);
  EXPECT_EQ(loss.policy_term, 0.0);
  EXPECT_EQ(loss.loss, 0.0);
}

TEST(DiscLossTest, ZeroDiscriminatorGivesUnitTerms) {
  nn::Mlp d(3, {4}, 1, nn::Activation::kTanh, nn::Activation::kIdentity);
  Rng rng(1);
  const DiscLoss loss =
      DiscLossAndGrads(d, RandomMatrix(3, 9, rng), RandomMatrix(3, 4, rng), 10);
  EXPECT_EQ(loss.data_term, 1.0);
  EXPECT_EQ(loss.policy_term, 1.0);
  EXPECT_EQ(loss.penalty, 0.0);
  EXPECT_EQ(loss.loss, 2.0);
}

TEST(DiscLossTest, LossCombinesTermsWithHalfPenaltyWeight) {
  Rng rng(2);
  const nn::Mlp d = TinyNet(rng);
  const Eigen::MatrixXd data = RandomMatrix(2, 6, rng);
  const Eigen::MatrixXd policy = RandomMatrix(2, 5, rng);
  const DiscLoss loss = DiscLossAndGrads(d, data, policy, 4.0);
  const Eigen::MatrixXd dd = d.Forward(data);
  const Eigen::MatrixXd dp = d.Forward(policy);
  double data_term = 0.0, policy_term = 0.0;
  for (int i = 0; i < 6; ++i) data_term += (dd(0, i) - 1) * (dd(0, i) - 1) / 6;
  for (int i = 0; i < 5; ++i) policy_term += (dp(0, i) + 1) * (dp(0, i) + 1) / 5;
  EXPECT_NEAR(loss.data_term, data_term, 1e-12);
  EXPECT_NEAR(loss.policy_term, policy_term, 1e-12);
  EXPECT_NEAR(loss.loss, data_term + policy_term + 2.0 * loss.penalty, 1e-12);
}

TEST(DiscLossTest, InputPenaltyGradientsMatchFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    nn::Mlp d = TinyNet(rng);
    const Eigen::MatrixXd data = RandomMatrix(2, 8, rng);
    const Eigen::MatrixXd policy = RandomMatrix(2, 8, rng);
    const DiscLoss loss = DiscLossAndGrads(d, data, policy, 10.0);
    const auto numeric = NumericGradient(d.Blocks(), [&] {
      return DiscLossAndGrads(d, data, policy, 10.0).loss;
    });
    EXPECT_LT(RelativeError(loss.grads.Blocks(), numeric), 1e-3);
  }
}

TEST(DiscLossTest, ParameterPenaltyGradientsMatchFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    nn::Mlp d = TinyNet(rng);
    const Eigen::MatrixXd data = RandomMatrix(2, 6, rng);
    const Eigen::MatrixXd policy = RandomMatrix(2, 6, rng);
    const auto mode = PenaltyMode::kParameterGradient;
    const DiscLoss loss = DiscLossAndGrads(d, data, policy, 10.0, mode);
    const auto numeric = NumericGradient(d.Blocks(), [&] {
      return DiscLossAndGrads(d, data, policy, 10.0, mode).loss;
    });
    EXPECT_LT(RelativeError(loss.grads.Blocks(), numeric), 1e-3);
  }
}

TEST(DiscLossTest, ParameterPenaltyOfLinearNetIsInputNormPlusOne) {
  // D = w.x + b: dD/dw = x and dD/db = 1.
  Eigen::MatrixXd w(1, 2);
  w << 0.3, -0.7;
  nn::Mlp d({nn::Layer{w, Eigen::VectorXd::Constant(1, 0.2),
                       nn::Activation::kIdentity}});
  Eigen::MatrixXd data(2, 2);
  data << 1.0, 2.0, -1.0, 0.5;
  const DiscLoss loss = DiscLossAndGrads(d, data, data, 1.0,
                                         PenaltyMode::kParameterGradient);
  EXPECT_NEAR(loss.penalty, ((1 + 1 + 1) + (4 + 0.25 + 1)) / 2.0, 1e-12);
}

TEST(DiscLossTest, InvariantUnderShuffling) {
  Rng rng(6);
  const nn::Mlp d = TinyNet(rng);
  const Eigen::MatrixXd data = RandomMatrix(2, 10, rng);
  const Eigen::MatrixXd policy = RandomMatrix(2, 7, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> pd(10), pp(7);
  pd.setIdentity();
  pp.setIdentity();
  std::swap(pd.indices()[0], pd.indices()[9]);
  std::swap(pd.indices()[3], pd.indices()[5]);
  std::swap(pp.indices()[1], pp.indices()[6]);
  const DiscLoss a = DiscLossAndGrads(d, data, policy, 10.0);
  const DiscLoss b = DiscLossAndGrads(d, data * pd, policy * pp, 10.0);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  nn::MlpGradients diff = b.grads;
  diff *= -1.0;
  diff += a.grads;
  EXPECT_LT(std::sqrt(diff.SquaredNorm()), 1e-12);
}

TEST(DiscLossTest, EmptyBatchThrows) {
  Rng rng(7);
  const nn::Mlp d = TinyNet(rng);
  EXPECT_THROW(DiscLossAndGrads(d, Eigen::MatrixXd(2, 0), RandomMatrix(2, 3, rng), 1),
               EmptyBatch);
  EXPECT_THROW(DiscLossAndGrads(d, RandomMatrix(2, 3, rng), Eigen::MatrixXd(2, 0), 1),
               EmptyBatch);
}

TEST(StyleRewardTest, ReferenceValues) {
  EXPECT_EQ(StyleReward(1.0), 1.0);
  EXPECT_EQ(StyleReward(-1.0), 0.0);
  EXPECT_EQ(StyleReward(0.0), 0.75);
  EXPECT_EQ(StyleReward(2.0), 0.75);
  EXPECT_EQ(StyleReward(0.5), 1.0 - 0.25 * 0.25);
}

TEST(StyleRewardTest, RangeAndClamp) {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double d = rng.Uniform(-10.0, 10.0);
    const double r = StyleReward(d);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    if (d <= -1.0) EXPECT_EQ(r, 0.0);
    if (d != 1.0) EXPECT_LT(r, 1.0);
  }
}

TEST(MotionDatasetTest, TwoFrameClipGivesOnePair) {
  const auto dataset = MotionDataset::FromClips({TrotClip(2)}, 50.0);
  ASSERT_EQ(dataset.size(), 1);
  const motion::MotionClip clip = TrotClip(2);
  EXPECT_EQ(Eigen::VectorXd(dataset.pairs().col(0)),
            PairVector(AmpFeatures(clip.frames[0]), AmpFeatures(clip.frames[1])));
}

int DistinctColumns(const Eigen::MatrixXd& m) {
  std::vector<Eigen::VectorXd> seen;
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    bool found = false;
    for (const auto& s : seen) found = found || s == m.col(i);
    if (!found) seen.push_back(m.col(i));
  }
  return static_cast<int>(seen.size());
}

TEST(MotionDatasetTest, MirroringDoublesDistinctPairs) {
  const motion::MotionClip walk = motion::SynthGait(
      motion::GaitParams::Preset(motion::GaitLabel::kWalk, 0.5), 30, 50.0);
  const auto single = MotionDataset::FromClips({walk}, 50.0);
  const auto both = MotionDataset::FromClips({walk, motion::Mirror(walk)}, 50.0);
  EXPECT_EQ(DistinctColumns(single.pairs()), 29);
  EXPECT_EQ(DistinctColumns(both.pairs()), 58);
}

TEST(MotionDatasetTest, ResamplesToControlRate) {
  const auto dataset = MotionDataset::FromClips({TrotClip(101, 100.0)}, 50.0);
  EXPECT_EQ(dataset.size(), 50);
  const motion::MotionClip direct = TrotClip(51, 50.0);
  const auto reference = MotionDataset::FromClips({direct}, 50.0);
  EXPECT_LT((dataset.pairs() - reference.pairs()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MotionDatasetTest, EmptyClipListThrows) {
  EXPECT_THROW(MotionDataset::FromClips({}, 50.0), EmptyDataset);
}

TEST(MotionDatasetTest, SamplingIsUniform) {
  const auto dataset = MotionDataset::FromClips({TrotClip(11)}, 50.0);
  ASSERT_EQ(dataset.size(), 10);
  Rng rng(9);
  constexpr int kDraws = 100000;
  const Eigen::MatrixXd draws = dataset.Sample(kDraws, rng);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < kDraws; ++i)
    for (int k = 0; k < 10; ++k)
      if (draws.col(i) == dataset.pairs().col(k)) {
        ++counts[k];
        break;
      }
  const double p = 0.1;
  const double sigma = std::sqrt(kDraws * p * (1 - p));
  int total = 0;
  for (int c : counts) {
    EXPECT_LT(std::abs(c - kDraws * p), 5 * sigma);
    total += c;
  }
  EXPECT_EQ(total, kDraws);
}

TEST(PairBufferTest, RingKeepsNewestAndBoundsSize) {
  PairBuffer buffer(3, PairSource::kPolicy);
  for (int i = 0; i < 5; ++i)
    buffer.Add(Eigen::VectorXd::Constant(kPairDim, static_cast<double>(i)));
  EXPECT_EQ(buffer.size(), 3u);
  std::multiset<double> values;
  for (std::size_t i = 0; i < buffer.size(); ++i) values.insert(buffer.At(i)[0]);
  EXPECT_EQ(values, (std::multiset<double>{2.0, 3.0, 4.0}));
  buffer.Clear();
  EXPECT_EQ(buffer.size(), 0u);
}

TEST(PairBufferTest, SamplesOnlyStoredPairs) {
  PairBuffer buffer(10, PairSource::kDataset);
  buffer.Add(Eigen::VectorXd::Constant(kPairDim, 1.0));
  buffer.Add(Eigen::VectorXd::Constant(kPairDim, 2.0));
  Rng rng(10);
  const Eigen::MatrixXd s = buffer.Sample(200, rng);
  for (Eigen::Index i = 0; i < s.cols(); ++i)
    EXPECT_TRUE(s(0, i) == 1.0 || s(0, i) == 2.0);
}

TEST(PairBufferTest, ErrorsOnEmptyOrWrongWidth) {
  PairBuffer buffer(4, PairSource::kPolicy);
  Rng rng(11);
  EXPECT_THROW(buffer.Sample(1, rng), EmptyBatch);
  EXPECT_THROW(buffer.Add(Eigen::VectorXd::Zero(3)), DimMismatch);
}

TEST(DiscriminatorTest, SeparablePairsReachHighAccuracy) {
  Rng rng(12);
  const Eigen::VectorXd w = RandomDirection(rng);
  const Separable train = MakeSeparable(w, 2000, rng);
  const Separable test = MakeSeparable(w, 1000, rng);
  DiscriminatorConfig config;
  config.hidden = {64, 32};
  config.learning_rate = 1e-3;
  Discriminator d(config, rng);
  int steps = 0;
  double accuracy = SignAccuracy(d, test);
  for (; steps < 500 && accuracy < 0.95; ++steps) {
    const int start = (steps * config.batch_size) % (2000 - config.batch_size);
    d.Update(Columns(train.positive, start, config.batch_size),
             Columns(train.negative, start, config.batch_size));
    if (steps % 10 == 9) accuracy = SignAccuracy(d, test);
  }
  EXPECT_GE(accuracy, 0.95) << "after " << steps << " steps";
}

TEST(DiscriminatorTest, UnpenalizedLossVanishesOnHeldOutSeparableData) {
  Rng rng(13);
  const Eigen::VectorXd w = RandomDirection(rng);
  const Separable train = MakeSeparable(w, 2000, rng);
  const Separable test = MakeSeparable(w, 500, rng);
  DiscriminatorConfig config;
  config.hidden = {64, 64};
  config.learning_rate = 1e-3;
  config.w_gp = 0.0;
  Discriminator d(config, rng);
  for (int step = 0; step < 600; ++step) {
    const int start = (step * config.batch_size) % (2000 - config.batch_size);
    d.Update(Columns(train.positive, start, config.batch_size),
             Columns(train.negative, start, config.batch_size));
  }
  const DiscLoss held_out = DiscLossAndGrads(d.net(), d.Normalize(test.positive),
                                             d.Normalize(test.negative), 0.0);
  EXPECT_LT(held_out.data_term + held_out.policy_term, 0.1);
}

TEST(DiscriminatorTest, NormalizerUsesDatasetStatistics) {
  Rng rng(14);
  const auto dataset = MotionDataset::FromClips({TrotClip(40)}, 50.0);
  DiscriminatorConfig config;
  config.hidden = {8};
  Discriminator d(config, rng);
  d.FitNormalizer(dataset);
  const Eigen::MatrixXd z = d.Normalize(dataset.pairs());
  const Eigen::VectorXd sd = dataset.Std();
  for (int i = 0; i < kPairDim; ++i) {
    EXPECT_NEAR(z.row(i).mean(), 0.0, 1e-9);
    if (sd[i] > 1e-2) {
      const double var = z.row(i).array().square().mean();
      EXPECT_NEAR(var, 1.0, 1e-9);
    }
  }
}

TEST(DiscriminatorTest, CheckpointRoundTripIsExact) {
  Rng rng(15);
  DiscriminatorConfig config;
  config.hidden = {8, 4};
  config.penalty_mode = PenaltyMode::kParameterGradient;
  Discriminator d(config, rng);
  d.FitNormalizer(MotionDataset::FromClips({TrotClip(10)}, 50.0));
  d.Update(RandomMatrix(kPairDim, 4, rng), RandomMatrix(kPairDim, 4, rng));
  std::stringstream buffer;
  BinaryWriter writer(buffer);
  d.Save(writer);
  BinaryReader reader(buffer);
  EXPECT_EQ(Discriminator::Load(reader), d);
}

TEST(DiscriminatorConfigTest, RejectsInvalidSettings) {
  DiscriminatorConfig config;
  config.activation = nn::Activation::kRelu;
  EXPECT_THROW(config.Validate(), NonSmoothActivation);
  config = {};
  config.w_gp = -1.0;
  EXPECT_THROW(config.Validate(), ConfigError);
  config = {};
  config.hidden = {};
  EXPECT_THROW(config.Validate(), ConfigError);
  EXPECT_EQ(PenaltyModeFromString(ToString(PenaltyMode::kParameterGradient)),
            PenaltyMode::kParameterGradient);
  EXPECT_THROW(PenaltyModeFromString("hessian"), ConfigError);
}

}  // namespace
}  // namespace locolab::amp
