#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "mcse/beamformer.h"
#include "mcse/error.h"
#include "mcse/scene.h"
#include "test_util.h"

namespace mcse {
namespace {

using cd = std::complex<double>;

MultichannelSpectrogram random_spec(std::uint64_t seed, int channels, int bins,
                                    int frames) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  MultichannelSpectrogram s(channels, frames, {2 * (bins - 1), bins - 1}, 16000);
  for (auto& v : s.values()) v = cfloat(g(rng), g(rng));
  return s;
}

Mask random_mask(std::uint64_t seed, int bins, int frames) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Mask m(bins, frames);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

Eigen::VectorXcd random_vector(std::mt19937_64& rng, int C) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd d(C);
  for (int c = 0; c < C; ++c) d[c] = cd(g(rng), g(rng));
  return d;
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("beamformer") {

TEST_CASE("half mask gives the sample covariance on both sides") {
  const auto spec = random_spec(1, 3, 5, 40);
  const CovariancePair cov = estimate_covariances(spec, Mask(5, 40, 0.5f));
  REQUIRE(cov.bins() == 5);
  REQUIRE(cov.channels() == 3);
  CHECK(cov.degenerate_bins.empty());
  for (int f = 0; f < 5; ++f) {
    ComplexMatrix sample = ComplexMatrix::Zero(3, 3);
    for (int t = 0; t < 40; ++t) {
      Eigen::VectorXcd y(3);
      for (int c = 0; c < 3; ++c) y[c] = cd(spec(c, f, t));
      sample += y * y.adjoint();
    }
    sample /= 40.0;
    CHECK(max_abs(cov.speech[f] - sample) <= 1e-12);
    const double load = kNoiseLoading * sample.trace().real() / 3.0;
    CHECK(max_abs(cov.noise[f] - sample -
                  load * ComplexMatrix::Identity(3, 3)) <= 1e-12);
  }
}

TEST_CASE("single frame with mask one gives a rank-1 speech covariance") {
  const auto spec = random_spec(2, 4, 3, 1);
  const CovariancePair cov = estimate_covariances(spec, Mask(3, 1, 1.0f));
  CHECK(cov.degenerate_bins == std::vector<int>{0, 1, 2});
  for (int f = 0; f < 3; ++f) {
    Eigen::VectorXcd y(4);
    for (int c = 0; c < 4; ++c) y[c] = cd(spec(c, f, 0));
    CHECK(max_abs(cov.speech[f] - y * y.adjoint()) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(cov.speech[f]);
    CHECK(es.eigenvalues()[2] <= 1e-12 * es.eigenvalues()[3]);
  }
}

TEST_CASE("covariances are Hermitian and PSD for random masks") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto spec = random_spec(10 + seed, 4, 6, 3 + seed);
    Mask m = random_mask(20 + seed, 6, 3 + seed);
    m(0, 0) = 0.0f;
    m(1, 0) = 1.0f;
    const CovariancePair cov = estimate_covariances(spec, m);
    for (int f = 0; f < 6; ++f) {
      for (const ComplexMatrix* x : {&cov.speech[f], &cov.noise[f]}) {
        REQUIRE(max_abs(*x - x->adjoint()) <= 1e-10 * (1.0 + max_abs(*x)));
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(*x);
        REQUIRE(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
      }
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> en(cov.noise[f]);
      REQUIRE(en.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("oracle-mask speech covariance aligns with the steering vector") {
  SceneConfig cfg;
  cfg.seed = 3;
  cfg.channels = 4;
  cfg.delays = {0.0, 2.5, -3.0, 5.0};
  cfg.snr_db = 0.0;
  cfg.duration_s = 3.0;
  const Scene scene = synth_scene(cfg);
  const auto spec = stft(scene.noisy);
  const auto image = stft(scene.speech_image);
  const Mask oracle = ideal_amplitude_mask(image, spec, 0);
  const CovariancePair cov = estimate_covariances(spec, oracle);
  std::vector<std::pair<double, int>> energy;
  for (int f = 1; f < spec.bins() - 1; ++f) {
    double e = 0.0;
    for (int t = 0; t < spec.frames(); ++t) e += std::norm(image(0, f, t));
    energy.emplace_back(e, f);
  }
  std::ranges::sort(energy, std::greater<>());
  for (int i = 0; i < 20; ++i) {
    const int f = energy[i].second;
    const double omega = 2.0 * testing::kPi * f / 1024.0;
    Eigen::VectorXcd d(4);
    for (int c = 0; c < 4; ++c) d[c] = std::polar(1.0, -omega * cfg.delays[c]);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(cov.speech[f]);
    const Eigen::VectorXcd v = es.eigenvectors().col(3);
    const double cosine = std::abs(v.dot(d)) / (v.norm() * d.norm());
    CHECK(cosine >= 0.99);
  }
}

TEST_CASE("rank-1 MVDR is distortionless at the reference channel") {
  std::mt19937_64 rng(4);
  for (int C : {2, 4, 6}) {
    for (int ref = 0; ref < C; ++ref) {
      const Eigen::VectorXcd d = random_vector(rng, C);
      CovariancePair cov;
      cov.speech.push_back(2.5 * d * d.adjoint());
      cov.noise.push_back(ComplexMatrix::Identity(C, C));
      const ComplexMatrix w = mvdr_weights(cov, ref);
      const Eigen::VectorXcd expect = d * std::conj(d[ref]) / d.squaredNorm();
      CHECK((w.row(0).transpose() - expect).norm() <= 1e-12 * expect.norm());
      cd out = 0.0;
      for (int c = 0; c < C; ++c) out += std::conj(w(0, c)) * d[c];
      CHECK(std::abs(out - d[ref]) <= 1e-6 * std::abs(d[ref]));
    }
  }
}

TEST_CASE("single channel MVDR weight is exactly one") {
  const auto spec = random_spec(5, 1, 7, 20);
  const ComplexMatrix w = mvdr_weights(estimate_covariances(spec, random_mask(6, 7, 20)), 0);
  for (int f = 0; f < 7; ++f) CHECK(w(f, 0) == cd(1.0, 0.0));
}

TEST_CASE("MVDR weights are invariant to scaling the speech covariance") {
  const auto spec = random_spec(7, 3, 5, 30);
  CovariancePair cov = estimate_covariances(spec, random_mask(8, 5, 30));
  const ComplexMatrix w = mvdr_weights(cov, 1);
  for (double alpha : {1e-6, 0.3, 7.0, 1e8}) {
    CovariancePair scaled = cov;
    for (auto& s : scaled.speech) s *= alpha;
    CHECK(max_abs(mvdr_weights(scaled, 1) - w) <= 1e-9 * max_abs(w));
  }
}

TEST_CASE("MVDR rejects degenerate covariances and bad reference channels") {
  CovariancePair cov;
  cov.speech.push_back(ComplexMatrix::Zero(3, 3));
  cov.noise.push_back(ComplexMatrix::Identity(3, 3));
  try {
    mvdr_weights(cov, 0);
    FAIL("expected degenerate error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDegenerate);
  }
  cov.speech[0] = ComplexMatrix::Identity(3, 3);
  CHECK_THROWS_AS(mvdr_weights(cov, 3), Error);
  CHECK_THROWS_AS(mvdr_weights(cov, -1), Error);
}

TEST_CASE("apply_beamformer examples") {
  const auto spec = random_spec(9, 3, 6, 12);
  ComplexMatrix e_ref = ComplexMatrix::Zero(6, 3);
  e_ref.col(2).setOnes();
  const auto ref = apply_beamformer(spec, e_ref);
  REQUIRE(ref.channels() == 1);
  for (int f = 0; f < 6; ++f) {
    for (int t = 0; t < 12; ++t) REQUIRE(ref(0, f, t) == spec(2, f, t));
  }
  const auto zero = apply_beamformer(spec, ComplexMatrix::Zero(6, 3));
  for (const cfloat v : zero.values()) REQUIRE(v == cfloat(0.0f));

  std::mt19937_64 rng(10);
  ComplexMatrix w(6, 3);
  for (int f = 0; f < 6; ++f) w.row(f) = random_vector(rng, 3).transpose();
  const auto other = random_spec(11, 3, 6, 12);
  auto sum = spec;
  for (std::size_t i = 0; i < sum.values().size(); ++i) {
    sum.values()[i] += other.values()[i];
  }
  const auto a = apply_beamformer(spec, w), b = apply_beamformer(other, w);
  const auto ab = apply_beamformer(sum, w);
  for (std::size_t i = 0; i < ab.values().size(); ++i) {
    REQUIRE(std::abs(ab.values()[i] - (a.values()[i] + b.values()[i])) <=
            1e-5f * (1.0f + std::abs(ab.values()[i])));
  }
  CHECK_THROWS_AS(apply_beamformer(spec, ComplexMatrix::Zero(6, 2)), Error);
}

TEST_CASE("postfilter gain examples") {
  MultichannelSpectrogram spec(1, 3, {16, 8}, 16000);
  for (auto& v : spec.values()) v = cfloat(1.0f, -2.0f);
  Mask m(9, 3, 0.0f);
  m(0, 1) = 1.0f;
  m(0, 2) = 0.5f;
  const auto out = apply_postfilter(spec, m, 15.0);
  const double floor = std::pow(10.0, -0.75);
  CHECK(floor == doctest::Approx(0.1778).epsilon(1e-3));
  CHECK(std::abs(out(0, 0, 0)) == doctest::Approx(floor * std::sqrt(5.0)));
  CHECK(out(0, 0, 1) == spec(0, 0, 1));
  CHECK(std::abs(out(0, 0, 2)) == doctest::Approx(0.5 * std::sqrt(5.0)));
  CHECK(std::arg(out(0, 0, 0)) == doctest::Approx(std::arg(spec(0, 0, 0))));
  const auto unfloored = apply_postfilter(spec, m);
  CHECK(unfloored(0, 0, 0) == cfloat(0.0f));
  CHECK(suppression_floor(15.0) == doctest::Approx(floor));
  CHECK(suppression_floor(0.0) == 1.0);
  CHECK_THROWS_AS(apply_postfilter(spec, m, -3.0), Error);
  CHECK_THROWS_AS(apply_postfilter(spec, Mask(9, 4), 15.0), Error);
}

TEST_CASE("MVDR does not raise the noise power on compact-speech scenes") {
  for (std::uint64_t seed = 30; seed < 34; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.channels = 2 + seed % 5;
    cfg.snr_db = 0.0;
    cfg.duration_s = 2.0;
    cfg.noise = static_cast<NoiseKind>(seed % 3);
    const Scene scene = synth_scene(cfg);
    const auto spec = stft(scene.noisy);
    const Mask oracle = ideal_amplitude_mask(stft(scene.speech_image), spec, 0);
    const ComplexMatrix w = mvdr_weights(estimate_covariances(spec, oracle), 0);
    const auto noise = stft(scene.noise);
    const auto out = apply_beamformer(noise, w);
    double in_power = 0.0, out_power = 0.0;
    for (int f = 0; f < noise.bins(); ++f) {
      for (int t = 0; t < noise.frames(); ++t) {
        in_power += std::norm(noise(0, f, t));
        out_power += std::norm(out(0, f, t));
      }
    }
    MESSAGE("channels " << cfg.channels << " noise power ratio "
                        << 10.0 * std::log10(out_power / in_power) << " dB");
    CHECK(out_power <= in_power);
  }
}

}  // TEST_SUITE

}  // namespace mcse
