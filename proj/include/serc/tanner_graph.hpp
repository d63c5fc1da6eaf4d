#pragma once

#include <functional>
#include <string>
#include <vector>

#include "serc/fact_model.hpp"

namespace serc {

enum class Density { Low, High };

std::string_view to_string(Density d);
Density parse_density(std::string_view s);

struct CheckNode {
  std::string id;
  int sentence_index = 0;
  std::vector<FactRef> facts;  // arcs out of this check node, in fact order
  std::string query;
};

struct Arc {
  std::string check_id;
  FactRef fact;
};

/// Bipartite verification graph. Holds fact references only; the facts stay
/// owned by their SentenceUnits.
struct SemanticTannerGraph {
  std::vector<FactRef> variable_nodes;
  std::vector<CheckNode> check_nodes;
  std::vector<Arc> arcs;

  bool empty() const { return check_nodes.empty(); }
};

/// Query generator GenQ over one check group.
using QueryGenerator = std::function<std::string(const std::vector<AtomicFact>&)>;

/// One check node per sentence with facts, covering all of F_k.
SemanticTannerGraph build_low_density(const std::vector<SentenceUnit>& sentences, const QueryGenerator& gen_q);
/// One degree-1 check node per fact.
SemanticTannerGraph build_high_density(const std::vector<SentenceUnit>& sentences, const QueryGenerator& gen_q);
/// Per-sentence groups chunked to at most `max_group` facts (0 = whole sentence).
SemanticTannerGraph build_grouped(const std::vector<SentenceUnit>& sentences, int max_group,
                                  const QueryGenerator& gen_q);

struct DensityStats {
  int check_count = 0;
  int variable_count = 0;
  int arc_count = 0;
  double mean_check_degree = 0.0;
};

DensityStats density_stats(const SemanticTannerGraph& graph);

/// Adjacency dump: one JSON object per check node.
std::vector<nlohmann::json> adjacency_records(const SemanticTannerGraph& graph);

}  // namespace serc
