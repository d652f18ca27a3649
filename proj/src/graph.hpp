#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>

namespace ldgba::detail {

struct Components {
  std::vector<std::size_t> component;  // per vertex
  std::size_t count = 0;
};

inline Components strongly_connected_components(std::size_t num_vertices,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
  Graph g(num_vertices);
  for (const auto& [u, v] : edges) boost::add_edge(u, v, g);
  Components out;
  out.component.assign(num_vertices, 0);
  if (num_vertices == 0) return out;
  out.count = boost::strong_components(
      g, boost::make_iterator_property_map(out.component.begin(), boost::get(boost::vertex_index, g)));
  return out;
}

}  // namespace ldgba::detail
