#include "evtwin/repr/reconstruct.hpp"

#include <cmath>

namespace evtwin::repr {

namespace {

void require_sorted(const EventStream& stream) {
  for (std::size_t i = 1; i < stream.records.size(); ++i) {
    if (stream.records[i].t < stream.records[i - 1].t) {
      throw Error(ErrorCode::UnsortedStream, "stream not sorted by timestamp");
    }
  }
}

PixelMap decayed(const PixelMap& image, const TimestampGrid& last_update,
                 Timestamp t, double alpha) {
  if (alpha == 0.0) return image;
  PixelMap out(image.rows(), image.cols());
  for (Eigen::Index y = 0; y < image.rows(); ++y) {
    for (Eigen::Index x = 0; x < image.cols(); ++x) {
      out(y, x) = image(y, x) *
                  std::exp(-alpha * double(t - last_update(y, x)));
    }
  }
  return out;
}

PixelMap smoothed(const PixelMap& image, const SmoothingSpec& spec,
                  double theta_pos) {
  switch (spec.kind) {
    case SmoothingKind::none:
      return image;
    case SmoothingKind::gaussian:
      return gaussian_smooth(image, spec.gaussian_sigma);
    case SmoothingKind::bilateral: {
      const double range = spec.bilateral_sigma_range > 0.0
                               ? spec.bilateral_sigma_range
                               : 0.5 * theta_pos;
      return bilateral_smooth(image, spec.bilateral_sigma_space, range);
    }
  }
  return image;
}

}  // namespace

IntensityReconstruction reconstruct_intensity(
    const EventStream& stream, double theta_pos, double theta_neg,
    const ReconstructionOptions& options) {
  if (!(theta_pos > 0.0) || !(theta_neg < 0.0)) {
    throw Error(ErrorCode::BadThresholds,
                "reconstruction needs theta_pos > 0 > theta_neg");
  }
  if (options.alpha < 0.0) {
    throw Error(ErrorCode::BadSpec, "alpha must be >= 0");
  }
  if (options.mode == ReconstructionMode::fixed_fps &&
      options.frame_interval < 1) {
    throw Error(ErrorCode::BadSpec, "frame_interval must be >= 1");
  }
  require_sorted(stream);

  IntensityReconstruction out;
  PixelMap image = PixelMap::Zero(stream.height, stream.width);
  TimestampGrid last_update =
      TimestampGrid::Constant(stream.height, stream.width,
                              stream.empty() ? 0 : stream.records.front().t);

  auto emit = [&](Timestamp t) {
    out.frames.push_back(
        smoothed(decayed(image, last_update, t, options.alpha),
                 options.smoothing, theta_pos));
    out.timestamps.push_back(t);
  };

  if (stream.empty()) return out;

  Timestamp next_readout = stream.records.front().t + options.frame_interval;

  for (std::size_t i = 0; i < stream.records.size(); ++i) {
    const EventRecord& r = stream.records[i];

    if (options.mode == ReconstructionMode::fixed_fps) {
      while (next_readout <= r.t) {
        emit(next_readout);
        next_readout += options.frame_interval;
      }
    }

    double v = image(r.y, r.x);
    if (options.alpha > 0.0) {
      v *= std::exp(-options.alpha * double(r.t - last_update(r.y, r.x)));
    }
    image(r.y, r.x) = v + (r.p > 0 ? theta_pos : theta_neg);
    last_update(r.y, r.x) = r.t;

    const bool last_of_time =
        i + 1 == stream.records.size() || stream.records[i + 1].t != r.t;
    if (options.mode == ReconstructionMode::event_driven && last_of_time) {
      emit(r.t);
    }
  }

  return out;
}

PixelMap gaussian_smooth(const PixelMap& image, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::BadSpec, "gaussian sigma must be > 0");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * double(i) * double(i) /
                                  (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  const auto h = image.rows();
  const auto w = image.cols();
  PixelMap tmp = PixelMap::Zero(h, w);
  PixelMap out = PixelMap::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const Eigen::Index xx = std::clamp<Eigen::Index>(x + i, 0, w - 1);
        acc += kernel[i + radius] * image(y, xx);
      }
      tmp(y, x) = acc;
    }
  }
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const Eigen::Index yy = std::clamp<Eigen::Index>(y + i, 0, h - 1);
        acc += kernel[i + radius] * tmp(yy, x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

PixelMap bilateral_smooth(const PixelMap& image, double sigma_space,
                          double sigma_range) {
  if (!(sigma_space > 0.0) || !(sigma_range > 0.0)) {
    throw Error(ErrorCode::BadSpec, "bilateral sigmas must be > 0");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_space));
  const auto h = image.rows();
  const auto w = image.cols();
  PixelMap out = PixelMap::Zero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      double norm = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const Eigen::Index yy = std::clamp<Eigen::Index>(y + dy, 0, h - 1);
          const Eigen::Index xx = std::clamp<Eigen::Index>(x + dx, 0, w - 1);
          const double ds = double(dx) * dx + double(dy) * dy;
          const double dr = image(yy, xx) - image(y, x);
          const double wgt =
              std::exp(-0.5 * ds / (sigma_space * sigma_space)) *
              std::exp(-0.5 * dr * dr / (sigma_range * sigma_range));
          acc += wgt * image(yy, xx);
          norm += wgt;
        }
      }
      out(y, x) = acc / norm;
    }
  }
  return out;
}

}  // namespace evtwin::repr
