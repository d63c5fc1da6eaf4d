#include "serc/tanner_graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace serc {

std::string_view to_string(Density d) { return d == Density::Low ? "low" : "high"; }

Density parse_density(std::string_view s) {
  if (s == "low") return Density::Low;
  if (s == "high") return Density::High;
  throw std::invalid_argument("density must be 'low' or 'high', got '" + std::string(s) + "'");
}

SemanticTannerGraph build_grouped(const std::vector<SentenceUnit>& sentences, int max_group,
                                  const QueryGenerator& gen_q) {
  SemanticTannerGraph g;
  for (const auto& s : sentences) {
    if (s.facts.empty()) continue;
    std::size_t chunk = max_group > 0 ? static_cast<std::size_t>(max_group) : s.facts.size();
    for (std::size_t start = 0; start < s.facts.size(); start += chunk) {
      std::size_t end = std::min(s.facts.size(), start + chunk);
      std::vector<AtomicFact> group(s.facts.begin() + static_cast<std::ptrdiff_t>(start),
                                    s.facts.begin() + static_cast<std::ptrdiff_t>(end));
      CheckNode c;
      c.sentence_index = s.index;
      c.id = "c" + std::to_string(g.check_nodes.size() + 1);
      for (const auto& f : group) {
        c.facts.push_back(f.ref());
        g.variable_nodes.push_back(f.ref());
        g.arcs.push_back({c.id, f.ref()});
      }
      c.query = gen_q ? gen_q(group) : std::string{};
      g.check_nodes.push_back(std::move(c));
    }
  }
  return g;
}

SemanticTannerGraph build_low_density(const std::vector<SentenceUnit>& sentences, const QueryGenerator& gen_q) {
  return build_grouped(sentences, 0, gen_q);
}

SemanticTannerGraph build_high_density(const std::vector<SentenceUnit>& sentences, const QueryGenerator& gen_q) {
  return build_grouped(sentences, 1, gen_q);
}

DensityStats density_stats(const SemanticTannerGraph& graph) {
  DensityStats s;
  s.check_count = static_cast<int>(graph.check_nodes.size());
  s.variable_count = static_cast<int>(graph.variable_nodes.size());
  s.arc_count = static_cast<int>(graph.arcs.size());
  s.mean_check_degree = s.check_count == 0 ? 0.0 : static_cast<double>(s.arc_count) / s.check_count;
  return s;
}

std::vector<nlohmann::json> adjacency_records(const SemanticTannerGraph& graph) {
  std::vector<nlohmann::json> out;
  for (const auto& c : graph.check_nodes)
    out.push_back({{"check_id", c.id},
                   {"sentence_index", c.sentence_index},
                   {"query", c.query},
                   {"facts", c.facts}});
  return out;
}

}  // namespace serc
