#ifndef CPWA_SERIALIZATION_HPP
#define CPWA_SERIALIZATION_HPP

#include <map>
#include <string>
#include <vector>

#include "cpwa/pipeline.hpp"

namespace cpwa {

// JSON documents use a stable field order, so identical inputs serialize to
// byte-identical text. Timings are kept out of the stage artifacts for the
// same reason.

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string spec_to_json(const WorkspaceSpec& spec);
WorkspaceSpec spec_from_json_string(const std::string& text);
WorkspaceSpec load_spec(const std::string& path);  // parse + validate
void save_spec(const WorkspaceSpec& spec, const std::string& path);

struct AbstractionArtifact {
  StateSpace space;
  PosteriorGraph graph;
};

std::string abstraction_to_json(const StateSpace& space, const PosteriorGraph& graph);
AbstractionArtifact abstraction_from_json_string(const std::string& text);

std::string safe_sets_to_json(const SafeSets& safe);
SafeSets safe_sets_from_json_string(const std::string& text);

std::string pred_graph_to_json(const PredecessorGraph& pred);
PredecessorGraph pred_graph_from_json_string(const std::string& text);

std::string assignment_to_json(const Assignment& assignment);
Assignment assignment_from_json_string(const std::string& text);

std::string nets_to_json(const std::map<int, ReluNet>& locals,
                         const std::map<int, int>& partition_of, std::uint64_t seed);
void nets_from_json_string(const std::string& text, std::map<int, ReluNet>& locals,
                           std::map<int, int>& partition_of, std::uint64_t& seed);

std::string controller_to_json(const GlobalController& controller);
GlobalController controller_from_json_string(const std::string& text);

std::string reach_report_to_json(const std::vector<ReachReport>& reach,
                                 const std::vector<char>& chain_certified);
void reach_report_from_json_string(const std::string& text, std::vector<ReachReport>& reach,
                                   std::vector<char>& chain_certified);

std::string timings_to_json(const std::vector<StageTiming>& timings);

/// Header `t,x1..xn,u1..um,safe,goal_reached`; the final state row leaves the
/// input columns empty. An empty trajectory yields the header only.
std::string trajectory_to_csv(const Trajectory& trajectory, int n, int m);

}  // namespace cpwa

#endif  // CPWA_SERIALIZATION_HPP
