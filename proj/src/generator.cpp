#include "openview/generator.hpp"

#include <regex>
#include <set>

#include "openview/json_repair.hpp"
#include "openview/media.hpp"

namespace openview {

std::string generator_system_prompt(TaskType task) {
  const auto base = render_template(templates::kGeneratorBase, {});
  const auto block = render_template(
      task == TaskType::contextual ? templates::kGeneratorContextual : templates::kGeneratorDirectional, {});
  return base.at(0).content + "\n\n" + block.at(0).content;
}

std::vector<RenderedMessage> generation_messages(const PanoramaAnalysis& analysis, TaskType task, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  auto user = render_template(templates::kGeneratorUser, {{"category", std::string(to_string(analysis.label))},
                                                          {"summary", analysis.summary},
                                                          {"list_of_analyses", list_of_analyses(analysis.patches)},
                                                          {"k", std::to_string(k)}});
  std::vector<RenderedMessage> out;
  out.push_back({Role::system, generator_system_prompt(task)});
  out.push_back(std::move(user.at(0)));
  return out;
}

GenerationResult generate_proposals(Gateway& gw, const Panorama& pano, const PanoramaAnalysis& analysis, TaskType task,
                                    int k, const GeneratorOptions& opts) {
  check_panorama(pano);
  GenerationResult result;
  const std::string trace = "generate/" + pano.id + "/" + std::string(to_string(task));
  const Image small = downscale_to_long_edge(pano.pixels, opts.panorama_long_edge);
  ChatRequest req = make_request(opts.model, generation_messages(analysis, task, k), {as_payload(encode_png(small))},
                                 opts.params, trace);
  json list;
  try {
    const ModelResponse resp = gw.chat(req);
    list = parse_json_with_repair(resp.text, schemas::kProposalList, {&gw, opts.model, trace}, opts.repair_attempts)
               .value;
  } catch (const ParseFailure& e) {
    result.error = e.what();
    return result;
  } catch (const ContentError& e) {
    result.error = e.what();
    return result;
  }

  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      Proposal p = validate_proposal(list[i], task);
      p.id = proposal_id(pano.id, task, p.question);
      if (!seen.insert(p.id).second) throw ProposalRejected("question", "duplicate within the job");
      p.provenance.panorama_id = pano.id;
      p.provenance.generator_version = std::string(kGeneratorVersion);
      p.provenance.seed = opts.seed;
      if (task == TaskType::directional) p.neighbor_patch = directional_neighbor(p);
      result.proposals.push_back(std::move(p));
    } catch (const ProposalRejected& e) {
      result.rejections.push_back("element " + std::to_string(i) + ": " + e.what());
    }
  }
  if (result.proposals.empty()) result.error = "no valid proposals in " + std::to_string(list.size()) + " elements";
  return result;
}

std::optional<Rotation> parse_rotation_instruction(std::string_view question) {
  std::string q(question);
  for (char& c : q) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::string amount =
      R"((?:\s+(slightly|a little|a bit)|\s+(?:about|approximately|around|roughly|by|some)?\s*(\d+(?:\.\d+)?)\s*(?:°|degrees?|deg\b))?)";
  static const std::regex horizontal(R"(\b(?:turn|turning|rotate|rotating|pan|panning|look|looking|swivel|swiveling)\s+(?:slightly\s+)?(?:to\s+the\s+)?(left|right))" + amount);
  static const std::regex vertical(R"(\b(?:tilt|tilting|look|looking|pan|panning|rotate|rotating)\s+(?:slightly\s+)?(up|upward|upwards|down|downward|downwards))" + amount);

  auto magnitude = [](const std::smatch& m, bool slight_prefix) {
    if (m[3].matched) return std::stod(m[3].str());
    if (m[2].matched || slight_prefix) return 15.0;
    return 45.0;
  };
  Rotation r;
  bool found = false;
  std::smatch m;
  if (std::regex_search(q, m, horizontal)) {
    const bool slight = m.str(0).find("slightly") != std::string::npos && !m[2].matched;
    const double deg = magnitude(m, slight);
    r.dyaw = m[1].str() == "left" ? -deg : deg;
    found = true;
  }
  if (std::regex_search(q, m, vertical)) {
    const bool slight = m.str(0).find("slightly") != std::string::npos && !m[2].matched;
    const double deg = magnitude(m, slight);
    r.dpitch = m[1].str().rfind("up", 0) == 0 ? deg : -deg;
    found = true;
  }
  if (!found) return std::nullopt;
  return r;
}

std::optional<int> directional_neighbor(const Proposal& p) {
  const auto rot = parse_rotation_instruction(p.question);
  if (!rot) return std::nullopt;
  const ViewSpec target = apply_rotation(p.view, rot->dyaw, rot->dpitch);
  static const PatchGrid grid = patch_grid();
  return nearest_patch(grid, uv_to_angles(target.u_norm, target.v_norm));
}

Image render_question_view(const Panorama& pano, const Proposal& p, int long_edge) {
  ViewSpec v = p.view;
  v.roll = 0.0;
  return render_view(pano.pixels, v, long_edge);
}

}  // namespace openview
