#include "ddpol/channel.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace ddpol {

namespace {

double sinc(double z) {
  if (z == 0.0) return 1.0;
  const double a = kPi * z;
  return std::sin(a) / a;
}

void validate_shape(const PulseShape& shape) {
  if (shape.kind == PulseShape::Kind::sinc && shape.half_width < 8) {
    throw std::invalid_argument("sinc truncation must be at least 8 taps per side");
  }
}

void validate_scene(const SceneSpec& scene, const ZakParams& params) {
  for (const PolPath& p : scene.paths) {
    if (!(p.delay_s >= 0.0 && p.delay_s < params.delay_period_s)) {
      throw std::invalid_argument("path delay must lie in [0, tau_p)");
    }
    if (!(std::abs(p.doppler_hz) < params.doppler_period_hz / 2.0)) {
      throw std::invalid_argument("path Doppler must lie in (-nu_p/2, nu_p/2)");
    }
    for (const cplx& g : {p.gain.hh, p.gain.hv, p.gain.vh, p.gain.vv}) {
      if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) {
        throw std::invalid_argument("path gain entries must be finite");
      }
    }
  }
}

// x delayed by tau_s (circularly, truncated-sinc interpolation) and modulated
// by exp(j2pi nu (n/fs - tau)). Near-integer sample delays snap to an exact
// circular shift so on-grid scenes stay exact.
cvec delayed_modulated(const cvec& x, double fs, double tau_s, double nu_hz, int half_width) {
  const int len = static_cast<int>(x.size());
  const double d_samples = tau_s * fs;
  long long di = static_cast<long long>(std::floor(d_samples));
  double frac = d_samples - static_cast<double>(di);
  if (frac < 1e-9) {
    frac = 0.0;
  } else if (frac > 1.0 - 1e-9) {
    frac = 0.0;
    ++di;
  }
  const int shift = static_cast<int>(((di % len) + len) % len);

  cvec out(static_cast<std::size_t>(len));
  if (frac == 0.0) {
    for (int n = 0; n < len; ++n) {
      int s = n - shift;
      if (s < 0) s += len;
      out[static_cast<std::size_t>(n)] = x[static_cast<std::size_t>(s)];
    }
  } else {
    const int w = half_width;
    // se[i] = x[(i - w - shift)_L]; then out[n] = sum_u k[u] se[n + u] with
    // k[u] = sinc(w - u - frac), a plain FIR because frac is the same for
    // every output sample.
    std::vector<double> kernel(static_cast<std::size_t>(2 * w + 1));
    for (int u = 0; u <= 2 * w; ++u) {
      kernel[static_cast<std::size_t>(u)] = sinc(static_cast<double>(w - u) - frac);
    }
    cvec se(static_cast<std::size_t>(len + 2 * w));
    for (int i = 0; i < len + 2 * w; ++i) {
      int s = (i - w - shift) % len;
      if (s < 0) s += len;
      se[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(s)];
    }
    for (int n = 0; n < len; ++n) {
      double accr = 0.0;
      double acci = 0.0;
      const cplx* base = se.data() + n;
      for (int u = 0; u <= 2 * w; ++u) {
        const double kv = kernel[static_cast<std::size_t>(u)];
        accr += kv * base[u].real();
        acci += kv * base[u].imag();
      }
      out[static_cast<std::size_t>(n)] = cplx(accr, acci);
    }
  }

  if (nu_hz != 0.0) {
    for (int n = 0; n < len; ++n) {
      out[static_cast<std::size_t>(n)] *=
          std::polar(1.0, kTwoPi * nu_hz * (static_cast<double>(n) / fs - tau_s));
    }
  }
  return out;
}

void accumulate(cvec& acc, const cvec& term, cplx weight) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * term[i];
}

}  // namespace

Mat2c make_polar_response(double a, double b, double s, double phi, double delta, double gamma) {
  const double cross = std::sqrt(std::max(0.0, 1.0 - s * s));
  Mat2c m;
  m.hh = a * s * std::polar(1.0, phi);
  m.hv = a * cross * std::polar(1.0, delta);
  m.vh = m.hv;
  m.vv = b * s * std::polar(1.0, gamma);
  return m;
}

Mat2c draw_polar_response(RandomStream& rng) {
  const double a = rng.rademacher();
  const double b = rng.rademacher();
  const double s = rng.uniform01();
  const double phi = rng.uniform(0.0, kTwoPi);
  const double delta = rng.uniform(0.0, kTwoPi);
  const double gamma = rng.uniform(0.0, kTwoPi);
  return make_polar_response(a, b, s, phi, delta, gamma);
}

std::pair<double, double> draw_target_geometry(RandomStream& rng, const ZakParams& params) {
  const double tau = rng.uniform(0.0, params.delay_period_s / 4.0);
  const double nu = rng.uniform(-params.doppler_period_hz / 8.0, params.doppler_period_hz / 8.0);
  return {tau, nu};
}

PolFramePair apply_pol_channel(const ComplexFrame& xv, const ComplexFrame& xh,
                               const SceneSpec& scene, const ZakParams& params,
                               const PulseShape& shape) {
  if (xv.empty() || xv.size() != xh.size() || xv.sample_rate_hz != xh.sample_rate_hz) {
    throw std::invalid_argument("transmit frames must share length and sample rate");
  }
  validate_shape(shape);
  validate_scene(scene, params);

  PolFramePair out;
  out.v.sample_rate_hz = xv.sample_rate_hz;
  out.h.sample_rate_hz = xh.sample_rate_hz;
  out.v.samples.assign(xv.size(), cplx{0.0, 0.0});
  out.h.samples.assign(xh.size(), cplx{0.0, 0.0});

  const bool v_active = xv.energy() > 0.0;
  const bool h_active = xh.energy() > 0.0;
  for (const PolPath& p : scene.paths) {
    if (h_active) {
      const cvec sh =
          delayed_modulated(xh.samples, xh.sample_rate_hz, p.delay_s, p.doppler_hz, shape.half_width);
      accumulate(out.h.samples, sh, p.gain.hh);
      accumulate(out.v.samples, sh, p.gain.vh);
    }
    if (v_active) {
      const cvec sv =
          delayed_modulated(xv.samples, xv.sample_rate_hz, p.delay_s, p.doppler_hz, shape.half_width);
      accumulate(out.h.samples, sv, p.gain.hv);
      accumulate(out.v.samples, sv, p.gain.vv);
    }
  }
  return out;
}

double noise_variance(double snr_db, double signal_ref_energy, double sample_rate_hz,
                      const ZakParams& params) {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
  const double oversample = sample_rate_hz / params.bandwidth_hz();
  return signal_ref_energy * oversample /
         (params.time_bandwidth() * std::pow(10.0, snr_db / 10.0));
}

ComplexFrame add_noise(const ComplexFrame& y, double snr_db, double signal_ref_energy,
                       const ZakParams& params, RandomStream& rng) {
  if (y.empty()) throw std::invalid_argument("cannot add noise to an empty frame");
  if (std::isinf(snr_db) && snr_db > 0.0) return y;
  const double amp =
      std::sqrt(noise_variance(snr_db, signal_ref_energy, y.sample_rate_hz, params));
  ComplexFrame out = y;
  for (cplx& s : out.samples) s += amp * rng.complex_normal();
  return out;
}

DDSurface effective_channel_truth(const SceneSpec& scene, const ZakParams& params,
                                  const PulseShape& shape, Pol rx, Pol tx) {
  if (shape.kind != PulseShape::Kind::sinc) {
    throw std::invalid_argument("effective-channel sampling is defined for sinc shaping only");
  }
  validate_shape(shape);
  validate_scene(scene, params);

  const int w = shape.half_width;
  const int pts_per_cell = 8;
  const int q_count = 2 * w * pts_per_cell;
  const double step = 1.0 / pts_per_cell;  // in resolution cells
  const double big_b = params.bandwidth_hz();
  const double big_t = params.frame_duration_s();

  // Quadrature nodes in normalized units: z_q = -w + (q + 1/2)/pts, so the
  // same node set serves both the delay and Doppler integrals.
  std::vector<double> node(static_cast<std::size_t>(q_count));
  std::vector<double> sinc_node(static_cast<std::size_t>(q_count));
  for (int q = 0; q < q_count; ++q) {
    node[static_cast<std::size_t>(q)] = -w + (q + 0.5) * step;
    sinc_node[static_cast<std::size_t>(q)] = sinc(node[static_cast<std::size_t>(q)]);
  }
  const auto sinc_gated = [w](double z) { return std::abs(z) <= w ? sinc(z) : 0.0; };

  // exp(+j2pi f' tau) at tau = k/B: f' T = node, so the angle is node*k/(MN).
  const int grid = params.grid_size();
  std::vector<cvec> tau_phase(static_cast<std::size_t>(params.m),
                              cvec(static_cast<std::size_t>(q_count)));
  for (int k = 0; k < params.m; ++k) {
    for (int q = 0; q < q_count; ++q) {
      tau_phase[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)] =
          std::polar(1.0, kTwoPi * node[static_cast<std::size_t>(q)] * k / grid);
    }
  }

  DDSurface out(params.m, params.n);
  cvec i_tau(static_cast<std::size_t>(params.m));
  std::vector<std::vector<double>> weight_l(
      static_cast<std::size_t>(params.n), std::vector<double>(static_cast<std::size_t>(q_count)));
  for (const PolPath& p : scene.paths) {
    const cplx gain = p.gain.entry(rx, tx);
    if (gain == cplx(0.0, 0.0)) continue;

    // I_tau(u) with the e^{-j2pi nu_t t'} twist; t' B = node.
    for (int k = 0; k < params.m; ++k) {
      const double a = k - big_b * p.delay_s;  // u in delay cells
      cplx acc(0.0, 0.0);
      for (int q = 0; q < q_count; ++q) {
        const double both =
            sinc_node[static_cast<std::size_t>(q)] * sinc_gated(a - node[static_cast<std::size_t>(q)]);
        if (both == 0.0) continue;
        acc += both * std::polar(1.0, -kTwoPi * p.doppler_hz * node[static_cast<std::size_t>(q)] / big_b);
      }
      i_tau[static_cast<std::size_t>(k)] = acc * (step / big_b);
    }

    // Doppler-side sinc products are k-independent; precompute per l. The
    // frame's pulse train occupies [0, T), not a window centered at t = 0,
    // so the Doppler blur picks up the window-centroid phase
    // exp(-j pi (l - nu_t T) (N-1)/N); without it the surface would describe
    // a frame shifted left by (T - tau_p)/2.
    std::vector<cplx> centroid_l(static_cast<std::size_t>(params.n));
    for (int l = out.doppler_min(); l <= out.doppler_max(); ++l) {
      const double b = l - big_t * p.doppler_hz;  // v in Doppler cells
      std::vector<double>& row = weight_l[static_cast<std::size_t>(l - out.doppler_min())];
      for (int q = 0; q < q_count; ++q) {
        row[static_cast<std::size_t>(q)] =
            sinc_node[static_cast<std::size_t>(q)] * sinc_gated(b - node[static_cast<std::size_t>(q)]);
      }
      centroid_l[static_cast<std::size_t>(l - out.doppler_min())] =
          std::polar(1.0, -kPi * b * (params.n - 1) / params.n);
    }

    for (int k = 0; k < params.m; ++k) {
      const cvec& phase = tau_phase[static_cast<std::size_t>(k)];
      const cplx outer = gain * std::polar(1.0, kTwoPi * p.doppler_hz * (k / big_b - p.delay_s)) *
                         (big_b * big_t) * i_tau[static_cast<std::size_t>(k)] * (step / big_t);
      for (int l = out.doppler_min(); l <= out.doppler_max(); ++l) {
        const std::vector<double>& row = weight_l[static_cast<std::size_t>(l - out.doppler_min())];
        double accr = 0.0;
        double acci = 0.0;
        for (int q = 0; q < q_count; ++q) {
          const double wq = row[static_cast<std::size_t>(q)];
          accr += wq * phase[static_cast<std::size_t>(q)].real();
          acci += wq * phase[static_cast<std::size_t>(q)].imag();
        }
        out.at(k, l) += outer * centroid_l[static_cast<std::size_t>(l - out.doppler_min())] *
                        cplx(accr, acci);
      }
    }
  }
  return out;
}

SceneSpec scene_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SceneSpec scene;
  scene.rng_seed = j.value("rng_seed", std::uint64_t{0});
  for (const nlohmann::json& pj : j.at("paths")) {
    PolPath p;
    p.delay_s = pj.at("delay_s").get<double>();
    p.doppler_hz = pj.at("doppler_hz").get<double>();
    const nlohmann::json& h = pj.at("H");
    if (!h.is_array() || h.size() != 4) {
      throw std::invalid_argument("path H must be four [re, im] pairs (hh, hv, vh, vv)");
    }
    const auto entry = [&h](std::size_t i) {
      return cplx(h.at(i).at(0).get<double>(), h.at(i).at(1).get<double>());
    };
    p.gain.hh = entry(0);
    p.gain.hv = entry(1);
    p.gain.vh = entry(2);
    p.gain.vv = entry(3);
    scene.paths.push_back(p);
  }
  return scene;
}

std::string scene_to_json(const SceneSpec& scene) {
  nlohmann::json j;
  j["rng_seed"] = scene.rng_seed;
  j["paths"] = nlohmann::json::array();
  for (const PolPath& p : scene.paths) {
    nlohmann::json pj;
    pj["delay_s"] = p.delay_s;
    pj["doppler_hz"] = p.doppler_hz;
    pj["H"] = {{p.gain.hh.real(), p.gain.hh.imag()},
               {p.gain.hv.real(), p.gain.hv.imag()},
               {p.gain.vh.real(), p.gain.vh.imag()},
               {p.gain.vv.real(), p.gain.vv.imag()}};
    j["paths"].push_back(pj);
  }
  return j.dump(2);
}

}  // namespace ddpol
