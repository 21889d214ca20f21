#include "openview/filter.hpp"

#include <map>

#include "openview/json_repair.hpp"
#include "openview/media.hpp"
#include "openview/parallel.hpp"

namespace openview {

json to_json(const FilterVerdict& v) {
  if (!v.parsed) return {{"parsed", false}};
  return {{"format_reason", v.format_reason},
          {"format", v.format_valid ? "valid" : "invalid"},
          {"informative_reason", v.informative_reason},
          {"informative", v.informative_valid ? "valid" : "invalid"}};
}

FilterVerdict verdict_from_json(const json& j) {
  FilterVerdict v;
  if (!j.value("parsed", true)) {
    v.parsed = false;
    return v;
  }
  v.format_reason = j.value("format_reason", "");
  v.format_valid = j.at("format") == "valid";
  v.informative_reason = j.value("informative_reason", "");
  v.informative_valid = j.at("informative") == "valid";
  return v;
}

FilterVerdict assess_panorama(Gateway& gw, const Panorama& p, const FilterOptions& opts) {
  check_panorama(p);
  const Image small = downscale_to_long_edge(p.pixels, opts.long_edge);
  const std::string trace = "filter/" + p.id;
  ChatRequest req = make_request(opts.model, render_template(templates::kFilter, {}),
                                 {as_payload(encode_png(small))}, opts.params, trace);
  try {
    const ModelResponse resp = gw.chat(req);
    const auto out = parse_json_with_repair(resp.text, schemas::kFilterVerdict, {&gw, opts.model, trace},
                                            opts.repair_attempts);
    return verdict_from_json(out.value);
  } catch (const ParseFailure&) {
    FilterVerdict v;
    v.parsed = false;
    return v;
  } catch (const ContentError&) {
    FilterVerdict v;
    v.parsed = false;
    return v;
  }
}

GroupDecision filter_video_group(std::span<const FilterVerdict> verdicts) {
  int invalid = 0;
  for (const auto& v : verdicts) invalid += v.passes() ? 0 : 1;
  return invalid >= kVideoDropThreshold ? GroupDecision::drop : GroupDecision::keep;
}

FilterReport filter_records(Gateway& gw, const CorpusStore& store, std::vector<CorpusRecord>& records,
                            const FilterOptions& opts, int threads) {
  FilterReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].status == RecordStatus::raw) report.indices.push_back(i);
  }
  report.verdicts = parallel_map(report.indices.size(), threads, [&](std::size_t k) {
    return assess_panorama(gw, store.load_panorama(records[report.indices[k]]), opts);
  });
  report.assessed = static_cast<int>(report.indices.size());

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> videos;
  for (std::size_t k = 0; k < report.indices.size(); ++k) {
    const FilterVerdict& v = report.verdicts[k];
    CorpusRecord& r = records[report.indices[k]];
    if (!v.parsed) {
      ++report.unparseable;
      advance_status(r, RecordStatus::filtered_invalid, "unparseable");
    } else if (v.passes()) {
      advance_status(r, RecordStatus::filtered_valid);
    } else {
      advance_status(r, RecordStatus::filtered_invalid,
                     !v.format_valid ? "format: " + v.format_reason : "informative: " + v.informative_reason);
    }
    if (!r.source.video_id.empty()) videos[{r.source.dataset, r.source.source_path}].push_back(k);
  }
  for (const auto& [key, ks] : videos) {
    std::vector<FilterVerdict> group;
    for (std::size_t k : ks) group.push_back(report.verdicts[k]);
    if (filter_video_group(group) == GroupDecision::keep) continue;
    ++report.videos_dropped;
    for (std::size_t k : ks) {
      CorpusRecord& r = records[report.indices[k]];
      if (r.status == RecordStatus::filtered_valid) {
        r.status = RecordStatus::filtered_invalid;
        r.status_reason = "video dropped: multiple invalid frames";
      }
    }
  }
  for (std::size_t i : report.indices) {
    if (records[i].status == RecordStatus::filtered_valid) ++report.valid;
    if (records[i].status == RecordStatus::filtered_invalid) ++report.invalid;
  }
  return report;
}

}  // namespace openview
