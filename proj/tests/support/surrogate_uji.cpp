#include "surrogate_uji.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fpforge::testing {

namespace {

constexpr int kWapsPerBuilding = 167;  // 3 * 167 = 501; the rest are never heard
constexpr double kFloorHeight = 4.0;
constexpr double kRotation = 0.52;
constexpr int kFieldTerms = 16;
constexpr int kUsers = 18;

struct Footprint {
  Point origin;
  double width;
  double height;
};

constexpr std::array<Footprint, 3> kFootprints{{
    {{-7640.0, 4864920.0}, 70.0, 60.0},
    {{-7520.0, 4864840.0}, 90.0, 60.0},
    {{-7400.0, 4864740.0}, 110.0, 80.0},
}};

Point to_world(const Footprint& f, Point local) {
  const double c = std::cos(kRotation);
  const double s = std::sin(kRotation);
  return {f.origin.x + c * local.x - s * local.y, f.origin.y + s * local.x + c * local.y};
}

// Shadowing field approximated with random Fourier features.
struct Field {
  std::array<double, kFieldTerms> wx{};
  std::array<double, kFieldTerms> wy{};
  std::array<double, kFieldTerms> phase{};
  double amplitude = 0.0;

  double operator()(Point p) const {
    double sum = 0.0;
    for (int j = 0; j < kFieldTerms; ++j) sum += std::cos(wx[j] * p.x + wy[j] * p.y + phase[j]);
    return amplitude * std::sqrt(2.0 / kFieldTerms) * sum;
  }
};

struct Wap {
  std::size_t column = 0;
  int building = 0;
  int floor = 0;
  Point position;
  double tx_power = 0.0;
  Field field;
};

std::vector<std::array<Point, 2>> corridors(const Footprint& f) {
  const double in = 6.0;
  const Point a{in, in};
  const Point b{f.width - in, in};
  const Point c{f.width - in, f.height - in};
  const Point d{in, f.height - in};
  using Segment = std::array<Point, 2>;
  return {Segment{a, b},
          Segment{b, c},
          Segment{c, d},
          Segment{d, a},
          Segment{Point{in, f.height / 2}, Point{f.width - in, f.height / 2}},
          Segment{Point{f.width / 2, in}, Point{f.width / 2, f.height - in}}};
}

// Evenly spaced points along the corridor polyline with two skipped stretches.
std::vector<Point> reference_points(const Footprint& f, std::size_t count, std::mt19937_64& rng) {
  const auto segments = corridors(f);
  double total = 0.0;
  for (const auto& s : segments) total += distance(s[0], s[1]);

  const std::size_t gap = std::max<std::size_t>(1, count / 10);
  const std::size_t slots = count + 2 * gap;
  std::uniform_int_distribution<std::size_t> start(0, slots - gap);
  std::vector<bool> skip(slots, false);
  for (int g = 0; g < 2; ++g) {
    const std::size_t s0 = start(rng);
    for (std::size_t i = s0; i < s0 + gap && i < slots; ++i) skip[i] = true;
  }

  std::vector<Point> out;
  const double step = total / static_cast<double>(slots);
  for (std::size_t i = 0; i < slots && out.size() < count; ++i) {
    if (skip[i]) continue;
    double along = (static_cast<double>(i) + 0.5) * step;
    for (const auto& s : segments) {
      const double len = distance(s[0], s[1]);
      if (along <= len) {
        const double t = along / len;
        out.push_back(to_world(f, {s[0].x + t * (s[1].x - s[0].x), s[0].y + t * (s[1].y - s[0].y)}));
        break;
      }
      along -= len;
    }
  }
  // Overlapping gaps leave spare slots, so the count is always reached.
  return out;
}

std::vector<Wap> place_waps(std::mt19937_64& rng) {
  std::vector<std::size_t> columns(kUjiWapCount);
  for (std::size_t i = 0; i < columns.size(); ++i) columns[i] = i;
  std::shuffle(columns.begin(), columns.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Wap> waps;
  std::size_t next = 0;
  for (int b = 0; b < 3; ++b) {
    const Footprint& f = kFootprints[static_cast<std::size_t>(b)];
    const int floors = kUjiBlockCounts[static_cast<std::size_t>(b)][4] < 0 ? 4 : 5;
    for (int i = 0; i < kWapsPerBuilding; ++i) {
      Wap w;
      w.column = columns[next++];
      w.building = b;
      w.floor = static_cast<int>(unit(rng) * floors);
      w.position = to_world(f, {unit(rng) * f.width, unit(rng) * f.height});
      w.tx_power = -36.0 + 3.0 * gauss(rng);
      w.field.amplitude = 4.0;
      for (int j = 0; j < kFieldTerms; ++j) {
        w.field.wx[j] = gauss(rng) / 8.0;
        w.field.wy[j] = gauss(rng) / 8.0;
        w.field.phase[j] = unit(rng) * 2.0 * std::numbers::pi;
      }
      waps.push_back(w);
    }
  }
  return waps;
}

}  // namespace

FingerprintDataset make_surrogate_uji(const SurrogateOptions& options) {
  std::mt19937_64 layout_rng(options.seed);
  const std::vector<Wap> waps = place_waps(layout_rng);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, kUsers> device_offset{};
  for (double& o : device_offset) o = 2.0 * gauss(layout_rng);

  FingerprintDataset out;
  out.n_waps = kUjiWapCount;
  out.source_label = "surrogate-uji";
  std::int64_t timestamp = 1371713733;

  for (int b : options.buildings) {
    const Footprint& f = kFootprints[static_cast<std::size_t>(b)];
    for (int fl = 0; fl < 5; ++fl) {
      const int full = kUjiBlockCounts[static_cast<std::size_t>(b)][static_cast<std::size_t>(fl)];
      if (full < 0) continue;
      const auto count = static_cast<std::size_t>(
          std::max<long long>(1, std::llround(options.scale * full)));
      std::mt19937_64 rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(b * 10 + fl));
      const std::size_t n_rps = std::max<std::size_t>(1, (count + 10) / 20);
      const std::vector<Point> rps = reference_points(f, n_rps, rng);

      // Static per (RP, WAP) mean level.
      std::vector<std::vector<double>> level(rps.size());
      for (std::size_t r = 0; r < rps.size(); ++r) {
        level[r].assign(waps.size(), -200.0);
        for (std::size_t w = 0; w < waps.size(); ++w) {
          const Wap& wap = waps[w];
          if (wap.building != b) continue;
          const double dz = kFloorHeight * (wap.floor - fl);
          const double d = std::sqrt(std::pow(distance(rps[r], wap.position), 2) + dz * dz);
          level[r][w] = wap.tx_power - 30.0 * std::log10(std::max(d, 1.0)) -
                        14.0 * std::abs(wap.floor - fl) + wap.field(rps[r]) + 1.5 * gauss(rng);
        }
      }

      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t r = i % rps.size();
        const int user = static_cast<int>((r + static_cast<std::size_t>(fl)) % kUsers);
        FingerprintRecord rec;
        rec.rssi.assign(kUjiWapCount, static_cast<float>(kRssiFloor));
        for (std::size_t w = 0; w < waps.size(); ++w) {
          if (level[r][w] < -150.0) continue;
          const double v = level[r][w] + device_offset[static_cast<std::size_t>(user)] +
                           3.0 * gauss(rng);
          const double detect = 1.0 / (1.0 + std::exp(-(v + 90.0) / 2.0));
          if (unit(rng) >= detect) continue;
          const double q = std::clamp(std::round(v), -104.0, 0.0);
          rec.rssi[waps[w].column] = static_cast<float>(q);
        }
        rec.longitude = rps[r].x;
        rec.latitude = rps[r].y;
        rec.floor_id = fl;
        rec.building_id = b;
        rec.space_id = 100 + static_cast<std::int64_t>(r / 2);
        rec.relative_position = 1 + static_cast<std::int64_t>(r % 2);
        rec.user_id = user + 1;
        rec.phone_id = 1 + (user * 7) % 24;
        rec.timestamp = timestamp++;
        out.records.push_back(std::move(rec));
      }
    }
  }
  std::mt19937_64 order_rng(options.seed ^ 0x5eedULL);
  std::shuffle(out.records.begin(), out.records.end(), order_rng);
  return out;
}

}  // namespace fpforge::testing
