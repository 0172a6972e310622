#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ddpol/channel.hpp"
#include "ddpol/core.hpp"
#include "ddpol/estimation.hpp"
#include "ddpol/waveform.hpp"

#include <cmath>
#include <limits>

using namespace ddpol;

namespace {

const ZakParams kFull = validate_params(31, 37, 31.0 / 930000.0, 30000.0);

ComplexFrame zero_like(const ComplexFrame& ref) {
  ComplexFrame z;
  z.sample_rate_hz = ref.sample_rate_hz;
  z.samples.assign(ref.size(), cplx{0.0, 0.0});
  return z;
}

}  // namespace

TEST_CASE("forced scattering matrices") {
  const Mat2c co = make_polar_response(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);
  CHECK(std::abs(co.hh - cplx{1.0, 0.0}) < 1e-15);
  CHECK(std::abs(co.hv) < 1e-15);
  CHECK(std::abs(co.vh) < 1e-15);
  CHECK(std::abs(co.vv - cplx{1.0, 0.0}) < 1e-15);

  const Mat2c cross = make_polar_response(1.0, 0.0, 0.0, 0.0, kPi / 2.0, 0.0);
  CHECK(std::abs(cross.hh) < 1e-15);
  CHECK(std::abs(cross.hv - cplx{0.0, 1.0}) < 1e-15);
  CHECK(std::abs(cross.vh - cplx{0.0, 1.0}) < 1e-15);
  CHECK(std::abs(cross.vv) < 1e-15);

  const Mat2c general = make_polar_response(-1.0, 1.0, 0.6, 0.3, -0.4, 2.0);
  CHECK(std::abs(general.hh - (-0.6) * std::polar(1.0, 0.3)) < 1e-15);
  CHECK(std::abs(general.hv - (-std::sqrt(0.64)) * std::polar(1.0, -0.4)) < 1e-15);
  CHECK(general.hv == general.vh);
  CHECK(std::abs(general.vv - 0.6 * std::polar(1.0, 2.0)) < 1e-15);
}

TEST_CASE("random scattering draws are reciprocal and well scaled") {
  RandomStream rng(12);
  int strong = 0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const Mat2c h = draw_polar_response(rng);
    CHECK(h.hv == h.vh);
    // |hh|^2 + |hv|^2 = s^2 + (1 - s^2) = 1.
    CHECK(std::norm(h.hh) + std::norm(h.hv) == doctest::Approx(1.0));
    CHECK(std::abs(h.hh) == doctest::Approx(std::abs(h.vv)));
    if (std::abs(h.hh) >= 0.5) ++strong;
  }
  // s ~ U(0,1) puts |hh| = s above 0.5 half the time.
  CHECK(std::abs(strong - draws / 2) < draws / 10);
}

TEST_CASE("target geometry draw ranges") {
  RandomStream rng(21);
  const double tau_max = kFull.delay_period_s / 4.0;
  const double nu_max = kFull.doppler_period_hz / 8.0;
  double tau_sum = 0.0, nu_sum = 0.0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const auto [tau, nu] = draw_target_geometry(rng, kFull);
    CHECK(tau >= 0.0);
    CHECK(tau < tau_max);
    CHECK(nu >= -nu_max);
    CHECK(nu < nu_max);
    tau_sum += tau;
    nu_sum += nu;
  }
  CHECK(tau_sum / draws == doctest::Approx(tau_max / 2.0).epsilon(0.05));
  CHECK(std::abs(nu_sum / draws) < nu_max / 20.0);
}

TEST_CASE("integer-bin path is an exact circular shift with a Doppler ramp") {
  const ComplexFrame xh = pulsone(kFull, 0, 0);
  const ComplexFrame xv = zero_like(xh);
  const int k = 5, l = 3;
  const cplx gain{0.8, -0.2};

  SceneSpec scene;
  PolPath p;
  p.delay_s = k / kFull.bandwidth_hz();
  p.doppler_hz = l / kFull.frame_duration_s();
  p.gain.hh = gain;
  scene.paths.push_back(p);

  const PolFramePair y = apply_pol_channel(xv, xh, scene, kFull, PulseShape{});
  const int len = kFull.grid_size();
  for (int n = 0; n < len; ++n) {
    const double t = n / xh.sample_rate_hz - p.delay_s;
    const cplx expect = gain * xh.samples[static_cast<std::size_t>((n - k + len) % len)] *
                        std::polar(1.0, kTwoPi * p.doppler_hz * t);
    CHECK(std::abs(y.h.samples[static_cast<std::size_t>(n)] - expect) < 1e-12);
    CHECK(std::abs(y.v.samples[static_cast<std::size_t>(n)]) < 1e-15);
  }
}

TEST_CASE("polarimetric mixing is linear in the scene") {
  const ComplexFrame xh = pulsone(kFull, 2, 1);
  const ComplexFrame xv = spread_carrier(kFull, GdaftParams{1, 1, 1}, 0, 0);

  PolPath p;
  p.delay_s = 2.37 / kFull.bandwidth_hz();
  p.doppler_hz = -1.6 / kFull.frame_duration_s();
  p.gain = make_polar_response(1.0, -1.0, 0.7, 0.5, 1.1, -0.3);
  SceneSpec mixed;
  mixed.paths.push_back(p);

  // Same geometry split into four single-entry scenes.
  const PolFramePair full = apply_pol_channel(xv, xh, mixed, kFull, PulseShape{});
  ComplexFrame acc_h = zero_like(xh), acc_v = zero_like(xh);
  for (int rx = 0; rx < 2; ++rx) {
    for (int tx = 0; tx < 2; ++tx) {
      SceneSpec single = mixed;
      Mat2c& g = single.paths[0].gain;
      const cplx keep = g.entry(static_cast<Pol>(rx), static_cast<Pol>(tx));
      g = Mat2c{};
      (rx == 0 ? (tx == 0 ? g.hh : g.hv) : (tx == 0 ? g.vh : g.vv)) = keep;
      const PolFramePair part = apply_pol_channel(xv, xh, single, kFull, PulseShape{});
      for (std::size_t i = 0; i < acc_h.size(); ++i) {
        acc_h.samples[i] += part.h.samples[i];
        acc_v.samples[i] += part.v.samples[i];
      }
    }
  }
  for (std::size_t i = 0; i < acc_h.size(); ++i) {
    CHECK(std::abs(full.h.samples[i] - acc_h.samples[i]) < 1e-12);
    CHECK(std::abs(full.v.samples[i] - acc_v.samples[i]) < 1e-12);
  }
}

TEST_CASE("fractional delay keeps frame energy within the truncation budget") {
  const ComplexFrame xh = pulsone(kFull, 0, 0);
  const ComplexFrame xv = zero_like(xh);
  SceneSpec scene;
  PolPath p;
  p.delay_s = 2.5 / kFull.bandwidth_hz();
  p.doppler_hz = 1234.0;
  p.gain.hh = cplx{1.0, 0.0};
  scene.paths.push_back(p);
  const PolFramePair y = apply_pol_channel(xv, xh, scene, kFull, PulseShape{});
  CHECK(y.h.energy() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("scene validation") {
  const ComplexFrame xh = pulsone(kFull, 0, 0);
  const ComplexFrame xv = zero_like(xh);
  SceneSpec scene;
  PolPath p;
  p.gain.hh = cplx{1.0, 0.0};

  p.delay_s = kFull.delay_period_s;  // at the wrap point
  scene.paths = {p};
  CHECK_THROWS(apply_pol_channel(xv, xh, scene, kFull, PulseShape{}));

  p.delay_s = 0.0;
  p.doppler_hz = kFull.doppler_period_hz / 2.0;
  scene.paths = {p};
  CHECK_THROWS(apply_pol_channel(xv, xh, scene, kFull, PulseShape{}));

  p.doppler_hz = 0.0;
  p.gain.hh = cplx{std::nan(""), 0.0};
  scene.paths = {p};
  CHECK_THROWS(apply_pol_channel(xv, xh, scene, kFull, PulseShape{}));

  ComplexFrame short_v = xv;
  short_v.samples.pop_back();
  scene.paths.clear();
  CHECK_THROWS(apply_pol_channel(short_v, xh, scene, kFull, PulseShape{}));
}

TEST_CASE("noise calibration and passthrough") {
  const double b = kFull.bandwidth_hz();
  // Doubling the sample rate doubles the per-sample variance: the in-band
  // density is pinned, not the per-sample power.
  CHECK(noise_variance(0.0, 1.0, 2.0 * b, kFull) ==
        doctest::Approx(2.0 * noise_variance(0.0, 1.0, b, kFull)));
  CHECK(noise_variance(10.0, 1.0, b, kFull) ==
        doctest::Approx(noise_variance(0.0, 1.0, b, kFull) / 10.0));
  CHECK(noise_variance(0.0, 4.0, b, kFull) ==
        doctest::Approx(4.0 * noise_variance(0.0, 1.0, b, kFull)));

  ComplexFrame silent;
  silent.sample_rate_hz = b;
  silent.samples.assign(static_cast<std::size_t>(kFull.grid_size()), cplx{0.0, 0.0});

  RandomStream rng(9);
  const ComplexFrame noisy = add_noise(silent, 0.0, 1.0, kFull, rng);
  CHECK(noisy.energy() == doctest::Approx(1.0).epsilon(0.1));

  const ComplexFrame clean = add_noise(silent, std::numeric_limits<double>::infinity(), 1.0,
                                       kFull, rng);
  CHECK(clean.energy() == 0.0);

  ComplexFrame empty;
  empty.sample_rate_hz = b;
  CHECK_THROWS(add_noise(empty, 0.0, 1.0, kFull, rng));
}

TEST_CASE("scene JSON round trip") {
  SceneSpec scene;
  scene.rng_seed = 0xabcdef0123ULL;
  PolPath p;
  p.delay_s = 3.25e-6;
  p.doppler_hz = -941.5;
  p.gain = make_polar_response(1.0, -1.0, 0.37, 0.2, 1.9, -2.4);
  scene.paths.push_back(p);
  p.delay_s = 1.0e-6;
  p.gain = Mat2c{};
  scene.paths.push_back(p);

  const SceneSpec back = scene_from_json(scene_to_json(scene));
  REQUIRE(back.paths.size() == 2);
  CHECK(back.rng_seed == scene.rng_seed);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.paths[i].delay_s == scene.paths[i].delay_s);
    CHECK(back.paths[i].doppler_hz == scene.paths[i].doppler_hz);
    CHECK(back.paths[i].gain.hh == scene.paths[i].gain.hh);
    CHECK(back.paths[i].gain.hv == scene.paths[i].gain.hv);
    CHECK(back.paths[i].gain.vh == scene.paths[i].gain.vh);
    CHECK(back.paths[i].gain.vv == scene.paths[i].gain.vv);
  }

  CHECK_THROWS(scene_from_json("[]"));
  CHECK_THROWS(scene_from_json(R"({"paths": [{"delay_s": 0, "doppler_hz": 0, "H": [[0,0]]}]})"));
}

TEST_CASE("time-domain synthesis agrees with the continuous effective channel") {
  // Off-grid single path, H transmit only, read back with the matched filter.
  // Two independent routes: sinc-resampled time-domain synthesis vs the
  // quadrature-sampled continuous composition.
  const ComplexFrame xh = pulsone(kFull, 0, 0);
  const ComplexFrame xv = zero_like(xh);

  SceneSpec scene;
  PolPath p;
  p.delay_s = 2.37 / kFull.bandwidth_hz();
  p.doppler_hz = 1.6 / kFull.frame_duration_s();
  p.gain = make_polar_response(1.0, 1.0, 0.8, 0.3, -1.0, 0.9);
  scene.paths.push_back(p);

  const PolFramePair y = apply_pol_channel(xv, xh, scene, kFull, PulseShape{});
  const PolChannelEstimate est = estimate_pol_channels_zak(y.v, y.h, xv, xh, kFull);

  for (Pol rx : {Pol::h, Pol::v}) {
    const DDSurface truth = effective_channel_truth(scene, kFull, PulseShape{}, rx, Pol::h);
    const DDSurface& got = est.surface(rx, Pol::h);
    for (int k = 1; k <= 4; ++k) {
      for (int l = 0; l <= 3; ++l) {
        CHECK(std::abs(got.at(k, l) - truth.at(k, l)) < 1e-2);
      }
    }
  }
}
