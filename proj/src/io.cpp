#include "fatswarm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "fatswarm/error.hpp"

namespace fatswarm {

using Json = nlohmann::ordered_json;

std::string phase_name(std::size_t phase) {
  if (phase == 0) return "base";
  if (phase == 1) return "aux";
  return "aux" + std::to_string(phase);
}

namespace {

std::size_t phase_index(const std::string& name) {
  if (name == "base") return 0;
  if (name == "aux") return 1;
  if (name.size() > 3 && name.compare(0, 3, "aux") == 0) {
    std::size_t k = 0;
    const char* first = name.data() + 3;
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec == std::errc() && ptr == last && k >= 2) return k;
  }
  throw Error(ErrorCode::ParseFailure, "unknown phase '" + name + "'");
}

Json positions_json(const SwarmState& s) {
  Json arr = Json::array();
  for (const Vec2& p : s.positions) arr.push_back(Json::array({p.x, p.y}));
  return arr;
}

Json record(std::size_t episode, std::size_t step, const std::string& phase, const SwarmState& s,
            const std::vector<double>& action, double reward) {
  Json j;
  j["episode"] = episode;
  j["step"] = step;
  j["phase"] = phase;
  j["positions"] = positions_json(s);
  j["action"] = action;
  j["reward"] = reward;
  return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseFailure, fmt::format("bench csv line {}: bad number '{}'", line, s));
  return v;
}

}  // namespace

void write_trajectories(std::ostream& out, const std::vector<EpisodeTrace>& episodes) {
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const EpisodeTrace& tr = episodes[e];
    if (tr.states.size() != tr.steps() + 1 || tr.actions.size() != tr.steps() || tr.phases.size() != tr.steps())
      throw Error(ErrorCode::InvalidArgument, "write_trajectories: inconsistent episode " + std::to_string(e));
    out << record(e, 0, "initial", tr.states[0], {}, 0.0).dump() << '\n';
    for (std::size_t t = 0; t < tr.steps(); ++t)
      out << record(e, t + 1, phase_name(tr.phases[t]), tr.states[t + 1], tr.actions[t], tr.rewards[t]).dump()
          << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write_trajectories: stream write failed");
}

std::vector<EpisodeTrace> read_trajectories(std::istream& in) {
  std::vector<EpisodeTrace> episodes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      const auto episode = j.at("episode").get<std::size_t>();
      const auto step = j.at("step").get<std::size_t>();
      const auto phase = j.at("phase").get<std::string>();
      SwarmState s;
      s.step_index = step;
      for (const Json& p : j.at("positions")) {
        if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::ParseFailure, "position is not an [x, y] pair");
        s.positions.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      if (phase == "initial") {
        if (episode != episodes.size() || step != 0)
          throw Error(ErrorCode::ParseFailure, "initial record out of order");
        EpisodeTrace tr;
        tr.states.push_back(std::move(s));
        episodes.push_back(std::move(tr));
        continue;
      }
      if (episodes.empty() || episode + 1 != episodes.size())
        throw Error(ErrorCode::ParseFailure, "step record before its episode's initial record");
      EpisodeTrace& tr = episodes.back();
      if (step != tr.steps() + 1) throw Error(ErrorCode::ParseFailure, "step index out of sequence");
      if (s.size() != tr.states.front().size()) throw Error(ErrorCode::ParseFailure, "robot count changed");
      tr.phases.push_back(phase_index(phase));
      tr.actions.push_back(j.at("action").get<std::vector<double>>());
      tr.rewards.push_back(j.at("reward").get<double>());
      tr.states.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseFailure, fmt::format("trajectory line {}: {}", lineno, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseFailure, fmt::format("trajectory line {}: {}", lineno, e.what()));
    }
  }
  return episodes;
}

void save_trajectories(const std::filesystem::path& path, const std::vector<EpisodeTrace>& episodes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  write_trajectories(out, episodes);
}

std::vector<EpisodeTrace> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return read_trajectories(in);
}

std::string verdict_json(const PatternVerdict& verdict, const std::string& experiment, std::uint64_t seed,
                         std::size_t chain_length, const std::string& failure) {
  Json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["valid"] = verdict.valid;
  j["failure"] = failure.empty() ? Json(nullptr) : Json(failure);
  j["chain_length"] = chain_length;
  j["success_rate"] = verdict.success_rate();
  j["collisions"] = verdict.collisions();
  Json eps = Json::array();
  for (const EpisodeVerdict& e : verdict.episodes) {
    eps.push_back({{"collision_free", e.collision_free},
                   {"goal", e.goal},
                   {"steps_base", e.steps_base},
                   {"steps_aux", e.steps_aux},
                   {"steps_total", e.steps_base + e.steps_aux},
                   {"signal_initial", e.signal_initial},
                   {"signal_base_final", e.signal_base_final},
                   {"signal_final", e.signal_final}});
  }
  j["episodes"] = std::move(eps);
  return j.dump(2) + "\n";
}

BenchRow bench_row(const PatternVerdict& verdict, const std::string& experiment, std::uint64_t seed) {
  BenchRow row;
  row.experiment = experiment;
  row.seed = seed;
  row.success_rate = verdict.success_rate();
  row.collisions = verdict.collisions();
  if (verdict.episodes.empty()) return row;
  for (const EpisodeVerdict& e : verdict.episodes) {
    row.steps_base += static_cast<double>(e.steps_base);
    row.steps_aux += static_cast<double>(e.steps_aux);
  }
  const double n = static_cast<double>(verdict.episodes.size());
  row.steps_base /= n;
  row.steps_aux /= n;
  row.steps_total = row.steps_base + row.steps_aux;
  return row;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = std::string(kBenchHeader) + "\n";
  for (const BenchRow& r : rows) {
    if (r.experiment.find_first_of(",\n\r") != std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "bench_csv: experiment id contains a separator");
    out += fmt::format("{},{},{},{},{},{},{}\n", r.experiment, r.seed, r.steps_base, r.steps_aux, r.steps_total,
                       r.success_rate, r.collisions);
  }
  return out;
}

std::vector<BenchRow> parse_bench_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseFailure, "bench csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kBenchHeader) throw Error(ErrorCode::ParseFailure, "bench csv line 1: unexpected header");
  std::vector<BenchRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw Error(ErrorCode::ParseFailure, fmt::format("bench csv line {}: expected 7 fields", lineno));
    BenchRow r;
    r.experiment = f[0];
    r.seed = parse_number<std::uint64_t>(f[1], lineno);
    r.steps_base = parse_number<double>(f[2], lineno);
    r.steps_aux = parse_number<double>(f[3], lineno);
    r.steps_total = parse_number<double>(f[4], lineno);
    r.success_rate = parse_number<double>(f[5], lineno);
    r.collisions = parse_number<std::size_t>(f[6], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_svg(const SwarmState& state, const ExperimentConfig& cfg, const RenderOptions& opts,
                       const std::string& title) {
  const SwarmConfig& sc = cfg.swarm;
  const double k = opts.pixels_per_unit;
  const double margin = 20.0;
  const double width = 2.0 * sc.x_w * k + 2.0 * margin;
  const double height = 2.0 * sc.y_w * k + 2.0 * margin + (title.empty() ? 0.0 : 20.0);
  const double top = title.empty() ? margin : margin + 20.0;
  // World (x, y) with y up to pixel coordinates with y down.
  auto px = [&](double x) { return margin + (x + sc.x_w) * k; };
  auto py = [&](double y) { return top + (sc.y_w - y) * k; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      width, height, width, height);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", width, height);
  if (!title.empty())
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
                       margin, margin + 6.0, title);
  svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     px(-sc.x_w), py(sc.y_w), 2.0 * sc.x_w * k, 2.0 * sc.y_w * k);
  if (cfg.mode == RewardMode::PredefinedPoint) {
    svg += fmt::format(
        "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n",
        px(0.0), py(0.0), cfg.goal.radius(sc) * k);
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#888\"/>\n", px(0.0), py(0.0));
  }

  const std::size_t n = state.size();
  std::vector<bool> fully_visible(n, true);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!mutually_visible(state, i, j, sc)) fully_visible[i] = fully_visible[j] = false;

  if (opts.occlusion_shading && n > 1) {
    // Shadows cast by every other robot as seen from robot 0.
    const Vec2 viewer = state.positions[0];
    const double reach = 4.0 * std::hypot(sc.x_w, sc.y_w);
    svg += "<g fill=\"#555\" fill-opacity=\"0.15\" stroke=\"none\">\n";
    for (std::size_t j = 1; j < n; ++j) {
      const Disk occ = state.disk(j, sc.r_bot);
      if (distance(viewer, occ.center) <= occ.radius) continue;
      const ShadowRegion sh = shadow_of(viewer, occ);
      const auto [t1, t2] = sh.tangent_points();
      const Vec2 f1 = viewer + (t1 - viewer) * (reach / norm(t1 - viewer));
      const Vec2 f2 = viewer + (t2 - viewer) * (reach / norm(t2 - viewer));
      svg += fmt::format("<polygon points=\"{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}\"/>\n", px(t1.x),
                         py(t1.y), px(f1.x), py(f1.y), px(f2.x), py(f2.y), px(t2.x), py(t2.y));
    }
    svg += "</g>\n";
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = state.positions[i];
    if (opts.scan_rings && std::isfinite(sc.r_scan))
      svg += fmt::format(
          "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"none\" stroke=\"#4a90d9\" stroke-opacity=\"0.4\"/>\n",
          px(p.x), py(p.y), sc.r_scan * k);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = state.positions[i];
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"{}\" stroke=\"black\"/>\n", px(p.x),
                       py(p.y), sc.r_bot * k, fully_visible[i] ? "#2e8b57" : "#d9534f");
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> render_episode(const EpisodeTrace& episode, const ExperimentConfig& cfg,
                                                  const RenderOptions& opts, const std::filesystem::path& out_dir,
                                                  const std::string& prefix) {
  if (episode.states.empty()) throw Error(ErrorCode::InvalidArgument, "render_episode: empty episode");
  ensure_directory(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const SwarmState& s, const std::string& name) {
    const auto path = out_dir / (prefix + name + ".svg");
    write_text(path, render_svg(s, cfg, opts, prefix + name));
    written.push_back(path);
  };
  emit(episode.states.front(), "initial");
  for (std::size_t t = 0; t < episode.steps(); ++t) {
    const bool last_of_phase = t + 1 == episode.steps() || episode.phases[t + 1] != episode.phases[t];
    if (last_of_phase) emit(episode.states[t + 1], phase_name(episode.phases[t]) + "-final");
  }
  return written;
}

void save_chain(const std::filesystem::path& dir, const PolicyChain& chain, const ExperimentConfig& cfg) {
  if (chain.size() == 0) throw Error(ErrorCode::InvalidArgument, "save_chain: empty chain");
  ensure_directory(dir);
  Json j;
  j["policies"] = chain.size();
  j["horizons"] = chain.horizons;
  j["eps_conv"] = chain.switch_criterion.eps_conv;
  j["k_consecutive"] = chain.switch_criterion.k_consecutive;
  j["config"] = Json::parse(config_to_json(cfg));
  write_text(dir / "chain.json", j.dump(2) + "\n");
  for (std::size_t i = 0; i < chain.size(); ++i) {
    save_checkpoint(dir / fmt::format("policy_{}.ckpt", i), Checkpoint::of(chain.policies[i]));
    if (i < chain.values.size()) save_checkpoint(dir / fmt::format("value_{}.ckpt", i), Checkpoint::of(chain.values[i]));
  }
}

LoadedChain load_chain(const std::filesystem::path& dir) {
  const auto meta_path = dir / "chain.json";
  std::ifstream in(meta_path);
  if (!in) throw Error(ErrorCode::MissingCheckpoint, "no chain bundle at '" + dir.string() + "'");
  LoadedChain out;
  try {
    const Json j = Json::parse(in);
    out.config = config_from_json(j.at("config").dump());
    const auto count = j.at("policies").get<std::size_t>();
    out.chain.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    out.chain.switch_criterion.eps_conv = j.at("eps_conv").get<double>();
    out.chain.switch_criterion.k_consecutive = j.at("k_consecutive").get<std::size_t>();
    for (std::size_t i = 0; i < count; ++i) {
      const Checkpoint pc = load_checkpoint(dir / fmt::format("policy_{}.ckpt", i));
      if (pc.kind != NetworkKind::Policy)
        throw Error(ErrorCode::ParseFailure, fmt::format("policy_{}.ckpt is not a policy checkpoint", i));
      out.chain.policies.push_back(pc.policy());
      const auto vpath = dir / fmt::format("value_{}.ckpt", i);
      if (std::filesystem::exists(vpath)) out.chain.values.push_back(load_checkpoint(vpath).value());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseFailure, std::string("chain.json: ") + e.what());
  }
  if (out.chain.size() == 0) throw Error(ErrorCode::ParseFailure, "chain.json lists no policies");
  const std::size_t obs = 2 * out.config.swarm.n;
  for (const GaussianPolicy& p : out.chain.policies)
    if (p.obs_dim() != obs || p.act_dim() != obs)
      throw Error(ErrorCode::DimensionMismatch, "chain policy does not match the bundle's swarm size");
  return out;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw Error(ErrorCode::IoFailure, "cannot create directory '" + dir.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

}  // namespace fatswarm
