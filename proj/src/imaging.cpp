#include "eaem/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "eaem/constants.hpp"
#include "eaem/errors.hpp"
#include "eaem/parallel.hpp"
#include "eaem/rng.hpp"

namespace eaem {

namespace {

struct KernelTap {
  std::ptrdiff_t dx;
  std::ptrdiff_t dy;
  double weight;
};

/// Normalised radial Gaussian exp(-r^2 / 2 sigma^2), truncated at 3 sigma.
std::vector<KernelTap> footprint_kernel(double sigma_nm, double pixel_nm) {
  const double s = sigma_nm / pixel_nm;
  const double cut = 3.0 * s;
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(cut));
  std::vector<KernelTap> taps;
  double total = 0.0;
  for (std::ptrdiff_t dy = -reach; dy <= reach; ++dy)
    for (std::ptrdiff_t dx = -reach; dx <= reach; ++dx) {
      const double r2 = static_cast<double>(dx * dx + dy * dy);
      if (r2 > cut * cut)
        continue;
      const double w = std::exp(-0.5 * r2 / (s * s));
      taps.push_back({dx, dy, w});
      total += w;
    }
  for (auto& t : taps)
    t.weight /= total;
  return taps;
}

double apply_kernel(const PhaseMap& map, const std::vector<KernelTap>& taps, std::size_t x,
                    std::size_t y) {
  const auto w = static_cast<std::ptrdiff_t>(map.width);
  const auto h = static_cast<std::ptrdiff_t>(map.height);
  double sum = 0.0;
  for (const auto& t : taps) {
    const auto xi = mirror_index(static_cast<std::ptrdiff_t>(x) + t.dx, w);
    const auto yi = mirror_index(static_cast<std::ptrdiff_t>(y) + t.dy, h);
    sum += t.weight * map.at(static_cast<std::size_t>(xi), static_cast<std::size_t>(yi));
  }
  return sum;
}

} // namespace

PhaseMap PhaseMap::zeros(std::size_t width, std::size_t height, double pixel_size_nm) {
  PhaseMap m;
  m.width = width;
  m.height = height;
  m.pixel_size_nm = pixel_size_nm;
  m.values.assign(width * height, 0.0);
  return m;
}

void PhaseMap::validate() const {
  if (width == 0 || height == 0)
    throw ConfigurationError("phase map must have at least one pixel");
  if (values.size() != width * height)
    throw ConfigurationError("phase map value count does not match its dimensions");
  if (!(pixel_size_nm > 0.0))
    throw ConfigurationError("phase map pixel size must be positive");
  for (double v : values)
    if (!std::isfinite(v))
      throw ConfigurationError("phase map contains a non-finite value");
}

void ProbeFootprints::validate() const {
  if (!(sigma_inner_nm > 0.0) || !(sigma_outer_nm > sigma_inner_nm))
    throw ConfigurationError("footprints need sigma_outer > sigma_inner > 0");
  if (!(d01_nm > 0.0))
    throw ConfigurationError("waist separation d01 must be positive");
}

std::size_t ImageJob::electrons_per_pixel() const {
  const double n = dose_per_nm2 * map.pixel_size_nm * map.pixel_size_nm;
  // Guard against 400 x 0.3^2 landing just below 36.
  return static_cast<std::size_t>(std::floor(n + 1e-9));
}

void ImageJob::validate() const {
  map.validate();
  footprints.validate();
  errors.validate();
  if (!(dose_per_nm2 > 0.0))
    throw ConfigurationError("dose must be positive");
  if (k == 0)
    throw ConfigurationError("k must be at least 1");
  if (electrons_per_pixel() < k) {
    std::ostringstream msg;
    msg << "per-pixel electron budget " << electrons_per_pixel() << " is below k = " << k;
    throw ConfigurationError(msg.str());
  }
}

std::ptrdiff_t mirror_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1)
    return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0)
    i += period;
  return i < n ? i : period - i;
}

double effective_delta_phi(const PhaseMap& map, const ProbeFootprints& fp, std::size_t x,
                           std::size_t y) {
  if (x >= map.width || y >= map.height)
    throw DomainError("pixel outside the phase map");
  fp.validate();
  const auto inner = footprint_kernel(fp.sigma_inner_nm, map.pixel_size_nm);
  const auto outer = footprint_kernel(fp.sigma_outer_nm, map.pixel_size_nm);
  return apply_kernel(map, inner, x, y) - apply_kernel(map, outer, x, y);
}

PhaseMap effective_delta_phi_map(const PhaseMap& map, const ProbeFootprints& fp, unsigned threads) {
  map.validate();
  fp.validate();
  const auto inner = footprint_kernel(fp.sigma_inner_nm, map.pixel_size_nm);
  const auto outer = footprint_kernel(fp.sigma_outer_nm, map.pixel_size_nm);
  PhaseMap out = PhaseMap::zeros(map.width, map.height, map.pixel_size_nm);
  parallel_for(map.height, threads, [&](std::size_t y) {
    for (std::size_t x = 0; x < map.width; ++x)
      out.at(x, y) = apply_kernel(map, inner, x, y) - apply_kernel(map, outer, x, y);
  });
  return out;
}

EntangledImage simulate_entangled_image(const ImageJob& job) {
  job.validate();
  const PhaseMap target = effective_delta_phi_map(job.map, job.footprints, job.threads);
  const std::size_t n = job.processes_per_pixel();

  EntangledImage out;
  out.estimate = PhaseMap::zeros(job.map.width, job.map.height, job.map.pixel_size_nm);
  out.spoil_rate = out.estimate;
  out.processes_per_pixel = n;
  out.unused_electrons_per_pixel = job.electrons_per_pixel() - n * job.k;

  std::vector<char> empty(target.size(), 0);
  parallel_for(target.size(), job.threads, [&](std::size_t i) {
    auto stream = rng::make_stream(job.seed, rng::Domain::entangled_pixel, i);
    const ProcessKernel kernel(job.k, target.values[i], job.errors);
    std::size_t left = 0;
    std::size_t usable = 0;
    std::size_t spoiled = 0;
    for (std::size_t p = 0; p < n; ++p) {
      const ProcessOutcome o = kernel.run(stream);
      spoiled += o.spoiled ? 1 : 0;
      if (!o.excluded) {
        ++usable;
        left += o.left ? 1 : 0;
      }
    }
    out.spoil_rate.values[i] = static_cast<double>(spoiled) / static_cast<double>(n);
    if (usable == 0) {
      empty[i] = 1;
      return;
    }
    out.estimate.values[i] = estimate_phase_from_counts(left, usable, job.k, job.estimator).value;
  });
  out.empty_pixels = static_cast<std::size_t>(std::count(empty.begin(), empty.end(), 1));
  return out;
}

PhaseMap simulate_conventional_image(const ImageJob& job) {
  job.validate();
  PhaseMap out = effective_delta_phi_map(job.map, job.footprints, job.threads);
  const double sigma = 1.0 / std::sqrt(static_cast<double>(job.electrons_per_pixel()));
  parallel_for(out.size(), job.threads, [&](std::size_t i) {
    auto stream = rng::make_stream(job.seed, rng::Domain::conventional_pixel, i);
    out.values[i] += sigma * stream.normal();
  });
  return out;
}

PhaseMap gaussian_smooth(const PhaseMap& map, double sigma_nm) {
  map.validate();
  if (!(sigma_nm >= 0.0))
    throw DomainError("smoothing sigma must be non-negative");
  if (sigma_nm == 0.0)
    return map;
  const double s = sigma_nm / map.pixel_size_nm;
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(4.0 * s));
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  double total = 0.0;
  for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
    const double v = std::exp(-0.5 * static_cast<double>(d * d) / (s * s));
    kernel[static_cast<std::size_t>(d + reach)] = v;
    total += v;
  }
  for (double& v : kernel)
    v /= total;

  const auto w = static_cast<std::ptrdiff_t>(map.width);
  const auto h = static_cast<std::ptrdiff_t>(map.height);
  PhaseMap tmp = PhaseMap::zeros(map.width, map.height, map.pixel_size_nm);
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (std::ptrdiff_t d = -reach; d <= reach; ++d)
        sum += kernel[static_cast<std::size_t>(d + reach)] *
               map.values[static_cast<std::size_t>(y * w + mirror_index(x + d, w))];
      tmp.values[static_cast<std::size_t>(y * w + x)] = sum;
    }
  PhaseMap out = tmp;
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double sum = 0.0;
      for (std::ptrdiff_t d = -reach; d <= reach; ++d)
        sum += kernel[static_cast<std::size_t>(d + reach)] *
               tmp.values[static_cast<std::size_t>(mirror_index(y + d, h) * w + x)];
      out.values[static_cast<std::size_t>(y * w + x)] = sum;
    }
  return out;
}

PhaseMap laplacian_filter(const PhaseMap& map) {
  map.validate();
  if (map.width < 3 || map.height < 3)
    throw ConfigurationError("Laplacian filter needs a map of at least 3x3 pixels");
  const auto w = static_cast<std::ptrdiff_t>(map.width);
  const auto h = static_cast<std::ptrdiff_t>(map.height);
  PhaseMap out = PhaseMap::zeros(map.width, map.height, map.pixel_size_nm);
  const auto v = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    return map.values[static_cast<std::size_t>(mirror_index(y, h) * w + mirror_index(x, w))];
  };
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x)
      out.values[static_cast<std::size_t>(y * w + x)] =
          4.0 * v(x, y) - v(x - 1, y) - v(x + 1, y) - v(x, y - 1) - v(x, y + 1);
  return out;
}

PhantomKind parse_phantom(std::string_view text) {
  if (text == "disc")
    return PhantomKind::disc;
  if (text == "shell")
    return PhantomKind::shell;
  if (text == "sinusoid")
    return PhantomKind::sinusoid;
  if (text == "blob-cluster")
    return PhantomKind::blob_cluster;
  throw ConfigurationError("unknown phantom '" + std::string(text) +
                           "' (disc, shell, sinusoid, blob-cluster)");
}

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
  case PhantomKind::disc:
    return "disc";
  case PhantomKind::shell:
    return "shell";
  case PhantomKind::sinusoid:
    return "sinusoid";
  case PhantomKind::blob_cluster:
    return "blob-cluster";
  }
  return "unknown";
}

PhaseMap make_phantom(const PhantomSpec& spec) {
  if (!(spec.amplitude_rad >= 0.0 && spec.amplitude_rad <= 0.5))
    throw DomainError("phantom amplitude must lie in [0, 0.5] rad");
  if (spec.width == 0 || spec.height == 0 || !(spec.pixel_size_nm > 0.0))
    throw ConfigurationError("phantom needs positive dimensions and pixel size");
  PhaseMap m = PhaseMap::zeros(spec.width, spec.height, spec.pixel_size_nm);
  const double px = spec.pixel_size_nm;
  const double cx = 0.5 * static_cast<double>(spec.width - 1) * px;
  const double cy = 0.5 * static_cast<double>(spec.height - 1) * px;
  const double extent = static_cast<double>(std::min(spec.width, spec.height)) * px;

  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const double dx = static_cast<double>(x) * px - cx;
      const double dy = static_cast<double>(y) * px - cy;
      const double r = std::hypot(dx, dy);
      double v = 0.0;
      switch (spec.kind) {
      case PhantomKind::disc:
        v = r <= 0.25 * extent ? 1.0 : 0.0;
        break;
      case PhantomKind::shell:
        v = (r >= 0.2 * extent && r <= 0.3 * extent) ? 1.0 : 0.0;
        break;
      case PhantomKind::sinusoid:
        v = std::cos(2.0 * constants::pi * static_cast<double>(x) / spec.period_px);
        break;
      case PhantomKind::blob_cluster:
        break;
      }
      m.at(x, y) = v;
    }
  }

  if (spec.kind == PhantomKind::blob_cluster) {
    // Seven 1 nm blobs: one central, six on a ring, alternating sizes.
    constexpr double sigma = 1.0;
    std::vector<std::array<double, 3>> blobs{{0.0, 0.0, 1.0}};
    for (int j = 0; j < 6; ++j) {
      const double a = constants::pi * j / 3.0;
      const double ring = 0.22 * extent;
      blobs.push_back({ring * std::cos(a), ring * std::sin(a), j % 2 ? 0.6 : 0.9});
    }
    double peak = 0.0;
    for (std::size_t y = 0; y < spec.height; ++y)
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double dx = static_cast<double>(x) * px - cx;
        const double dy = static_cast<double>(y) * px - cy;
        double v = 0.0;
        for (const auto& [bx, by, h] : blobs) {
          const double r2 = (dx - bx) * (dx - bx) + (dy - by) * (dy - by);
          v += h * std::exp(-0.5 * r2 / (sigma * sigma));
        }
        m.at(x, y) = v;
        peak = std::max(peak, v);
      }
    for (double& v : m.values)
      v /= peak;
  }
  for (double& v : m.values)
    v *= spec.amplitude_rad;
  return m;
}

double rms_difference(const PhaseMap& a, const PhaseMap& b) {
  if (a.width != b.width || a.height != b.height)
    throw ConfigurationError("maps differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

} // namespace eaem
