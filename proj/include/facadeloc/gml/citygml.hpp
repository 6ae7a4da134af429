#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/detail/rapidxml.hpp>

#include "facadeloc/core/errors.hpp"
#include "facadeloc/gml/textured_face.hpp"

namespace facadeloc {

struct IngestOptions {
  // Added to every U coordinate, e.g. to reconcile height systems.
  double vertical_offset_m = 0.0;
};

struct ParseResult {
  std::vector<TexturedFace> faces;
  std::vector<IngestWarning> warnings;
};

namespace gml_detail {

namespace rx = boost::property_tree::detail::rapidxml;
using Node = rx::xml_node<char>;

inline std::string_view local_name(const Node* n) {
  std::string_view name(n->name(), n->name_size());
  const auto colon = name.rfind(':');
  return colon == std::string_view::npos ? name : name.substr(colon + 1);
}

inline std::optional<std::string_view> attribute(const Node* n, std::string_view wanted) {
  for (auto* a = n->first_attribute(); a; a = a->next_attribute()) {
    std::string_view name(a->name(), a->name_size());
    const auto colon = name.rfind(':');
    if (colon != std::string_view::npos) name = name.substr(colon + 1);
    if (name == wanted) return std::string_view(a->value(), a->value_size());
  }
  return std::nullopt;
}

// Concatenated text content of an element (data and CDATA children).
inline std::string text_of(const Node* n) {
  std::string out(n->value(), n->value_size());
  if (!out.empty()) return out;
  for (auto* c = n->first_node(); c; c = c->next_sibling()) {
    if (c->type() == rx::node_data || c->type() == rx::node_cdata) out.append(c->value(), c->value_size());
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_hash(std::string_view s) {
  std::string t = trim(s);
  if (!t.empty() && t.front() == '#') t.erase(0, 1);
  return t;
}

inline std::optional<std::vector<double>> parse_numbers(std::string_view text) {
  std::vector<double> out;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    while (p < end && std::strchr(" \t\r\n,", *p) != nullptr && *p != '\0') ++p;
    if (p >= end) break;
    double v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || !std::isfinite(v)) return std::nullopt;
    p = next;
    out.push_back(v);
  }
  return out;
}

struct RingRecord {
  std::vector<WorldPoint> vertices;
  std::string polygon_id;  // empty when the ring is not inside a Polygon
  bool interior = false;
  std::string error;  // non-empty when the coordinates could not be read
};

struct PolygonRecord {
  int interior_rings = 0;
};

struct TextureTarget {
  std::string image_uri;
  std::string target;  // polygon id from target/@uri
  std::string ring;    // ring id from textureCoordinates/@ring
  std::string coords;
};

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    const char* p = &text[i];
    if (*p == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

template <typename T>
bool nearly_equal(const T& a, const T& b) {
  return (to_vec(a) - to_vec(b)).cwiseAbs().maxCoeff() <= 1e-9;
}
template <>
inline bool nearly_equal<WorldPoint>(const WorldPoint& a, const WorldPoint& b) {
  return (a - b).cwiseAbs().maxCoeff() <= 1e-9;
}

template <typename T>
void drop_closing_vertex(std::vector<T>& ring) {
  if (ring.size() >= 2 && nearly_equal(ring.front(), ring.back())) ring.pop_back();
}

}  // namespace gml_detail

// Extracts textured faces from a CityGML document. Supports LinearRing
// geometry given as posList (or a run of pos elements) and ParameterizedTexture
// appearances whose TexCoordList entries reference rings by gml:id.
// Throws ParseError on malformed XML; problems with individual faces become
// warnings and the face is skipped.
inline ParseResult parse_citygml(std::string_view document, const IngestOptions& options = {}) {
  using namespace gml_detail;
  std::vector<char> buffer(document.begin(), document.end());
  buffer.push_back('\0');
  rx::xml_document<char> doc;
  try {
    doc.parse<rx::parse_validate_closing_tags>(buffer.data());
  } catch (const rx::parse_error& e) {
    // the parser writes terminators into the buffer, so count on the original
    const auto [line, col] = line_column(document, static_cast<std::size_t>(e.where<char>() - buffer.data()));
    throw ParseError(std::string("malformed XML: ") + e.what(), line, col);
  }

  std::map<std::string, RingRecord> rings;
  std::map<std::string, PolygonRecord> polygons;
  std::vector<TextureTarget> targets;

  auto read_ring = [](const Node* ring) {
    RingRecord rec;
    std::vector<double> values;
    int dim = 3;
    bool any = false;
    for (auto* c = ring->first_node(); c; c = c->next_sibling()) {
      if (c->type() != rx::node_element) continue;
      const auto name = local_name(c);
      if (name == "posList" || name == "pos") {
        if (auto d = attribute(c, "srsDimension")) dim = std::atoi(std::string(*d).c_str());
        auto nums = parse_numbers(text_of(c));
        if (!nums) {
          rec.error = "non-numeric coordinate in " + std::string(name);
          return rec;
        }
        values.insert(values.end(), nums->begin(), nums->end());
        any = true;
      }
    }
    if (!any) {
      rec.error = "ring has no posList";
    } else if (dim != 3) {
      rec.error = "only 3D coordinates are supported (srsDimension=" + std::to_string(dim) + ")";
    } else if (values.size() % 3 != 0) {
      rec.error = "coordinate count is not a multiple of 3";
    } else {
      for (std::size_t i = 0; i < values.size(); i += 3) {
        rec.vertices.emplace_back(values[i], values[i + 1], values[i + 2]);
      }
    }
    return rec;
  };

  // Depth-first walk carrying the innermost enclosing polygon id.
  std::function<void(const Node*, const std::string&)> visit = [&](const Node* n,
                                                                   const std::string& polygon) {
    for (auto* c = n->first_node(); c; c = c->next_sibling()) {
      if (c->type() != rx::node_element) continue;
      const auto name = local_name(c);
      if (name == "Polygon") {
        const std::string id = attribute(c, "id") ? std::string(*attribute(c, "id")) : std::string();
        if (!id.empty()) polygons[id];
        visit(c, id);
      } else if (name == "LinearRing") {
        RingRecord rec = read_ring(c);
        rec.polygon_id = polygon;
        const auto parent = local_name(n);
        rec.interior = parent == "interior" || parent == "innerBoundaryIs";
        if (rec.interior && !polygon.empty()) ++polygons[polygon].interior_rings;
        if (auto id = attribute(c, "id")) rings[std::string(*id)] = std::move(rec);
      } else if (name == "ParameterizedTexture") {
        std::string uri;
        for (auto* t = c->first_node(); t; t = t->next_sibling()) {
          if (t->type() == rx::node_element && local_name(t) == "imageURI") uri = trim(text_of(t));
        }
        for (auto* t = c->first_node(); t; t = t->next_sibling()) {
          if (t->type() != rx::node_element || local_name(t) != "target") continue;
          const std::string target = attribute(t, "uri") ? strip_hash(*attribute(t, "uri")) : "";
          for (auto* l = t->first_node(); l; l = l->next_sibling()) {
            if (l->type() != rx::node_element || local_name(l) != "TexCoordList") continue;
            for (auto* tc = l->first_node(); tc; tc = tc->next_sibling()) {
              if (tc->type() != rx::node_element || local_name(tc) != "textureCoordinates") continue;
              const std::string ring = attribute(tc, "ring") ? strip_hash(*attribute(tc, "ring")) : "";
              targets.push_back({uri, target, ring, text_of(tc)});
            }
          }
        }
      } else {
        visit(c, polygon);
      }
    }
  };
  visit(&doc, std::string());

  ParseResult result;
  std::set<std::string> seen;
  for (const auto& tt : targets) {
    auto ring_it = rings.find(tt.ring);
    const std::string fallback_id = tt.target.empty() ? tt.ring : tt.target;
    if (ring_it == rings.end()) {
      result.warnings.push_back({fallback_id, "texture references missing ring '" + tt.ring + "'"});
      continue;
    }
    const RingRecord& ring = ring_it->second;
    const std::string face_id = ring.polygon_id.empty() ? tt.ring : ring.polygon_id;
    if (!ring.error.empty()) {
      result.warnings.push_back({face_id, ring.error});
      continue;
    }
    if (ring.interior || (!ring.polygon_id.empty() && polygons[ring.polygon_id].interior_rings > 0)) {
      result.warnings.push_back({face_id, "faces with interior rings are not supported"});
      continue;
    }
    if (tt.image_uri.empty()) {
      result.warnings.push_back({face_id, "ParameterizedTexture without imageURI"});
      continue;
    }
    auto nums = parse_numbers(tt.coords);
    if (!nums || nums->size() % 2 != 0) {
      result.warnings.push_back({face_id, "malformed textureCoordinates"});
      continue;
    }
    TexturedFace face;
    face.face_id = face_id;
    face.texture_path = tt.image_uri;
    for (std::size_t i = 0; i < nums->size(); i += 2) face.st_ring.push_back({(*nums)[i], (*nums)[i + 1]});
    face.world_ring = ring.vertices;
    drop_closing_vertex(face.st_ring);
    drop_closing_vertex(face.world_ring);
    if (face.st_ring.size() != face.world_ring.size()) {
      result.warnings.push_back({face_id, "texture coordinate count " + std::to_string(face.st_ring.size()) +
                                              " does not match ring vertex count " +
                                              std::to_string(face.world_ring.size())});
      continue;
    }
    if (face.world_ring.size() < 3) {
      result.warnings.push_back({face_id, "ring has fewer than 3 vertices"});
      continue;
    }
    if (!seen.insert(face_id).second) {
      result.warnings.push_back({face_id, "face textured more than once; keeping the first texture"});
      continue;
    }
    for (auto& w : face.world_ring) w.z() += options.vertical_offset_m;
    result.faces.push_back(std::move(face));
  }
  return result;
}

namespace gml_detail {

inline std::string shortest(double v) {
  std::array<char, 40> buf{};
  auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

}  // namespace gml_detail

// Serializes faces as a minimal CityGML 2.0 building with one WallSurface per
// face and one ParameterizedTexture per face. Coordinates are written in
// shortest round-trip form, so parse_citygml recovers them bit-exactly.
inline std::string write_citygml(const std::vector<TexturedFace>& faces,
                                 std::string_view building_id = "building_0") {
  using gml_detail::shortest;
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out +=
      "<core:CityModel xmlns:core=\"http://www.opengis.net/citygml/2.0\" "
      "xmlns:bldg=\"http://www.opengis.net/citygml/building/2.0\" "
      "xmlns:app=\"http://www.opengis.net/citygml/appearance/2.0\" "
      "xmlns:gml=\"http://www.opengis.net/gml\">\n";
  out += "  <core:cityObjectMember>\n";
  out += "    <bldg:Building gml:id=\"" + std::string(building_id) + "\">\n";
  for (const auto& f : faces) {
    out += "      <bldg:boundedBy>\n        <bldg:WallSurface>\n          <bldg:lod2MultiSurface>\n";
    out += "            <gml:MultiSurface>\n              <gml:surfaceMember>\n";
    out += "                <gml:Polygon gml:id=\"" + f.face_id + "\">\n";
    out += "                  <gml:exterior>\n";
    out += "                    <gml:LinearRing gml:id=\"" + f.face_id + "_ring\">\n";
    out += "                      <gml:posList srsDimension=\"3\">";
    for (std::size_t i = 0; i <= f.world_ring.size(); ++i) {
      const auto& p = f.world_ring[i % f.world_ring.size()];
      if (i) out += ' ';
      out += shortest(p.x()) + ' ' + shortest(p.y()) + ' ' + shortest(p.z());
    }
    out += "</gml:posList>\n";
    out += "                    </gml:LinearRing>\n                  </gml:exterior>\n";
    out += "                </gml:Polygon>\n              </gml:surfaceMember>\n";
    out += "            </gml:MultiSurface>\n          </bldg:lod2MultiSurface>\n";
    out += "        </bldg:WallSurface>\n      </bldg:boundedBy>\n";
  }
  out += "    </bldg:Building>\n  </core:cityObjectMember>\n";
  out += "  <app:appearanceMember>\n    <app:Appearance>\n      <app:theme>rgbTexture</app:theme>\n";
  for (const auto& f : faces) {
    out += "      <app:surfaceDataMember>\n        <app:ParameterizedTexture>\n";
    out += "          <app:imageURI>" + f.texture_path + "</app:imageURI>\n";
    out += "          <app:target uri=\"#" + f.face_id + "\">\n            <app:TexCoordList>\n";
    out += "              <app:textureCoordinates ring=\"#" + f.face_id + "_ring\">";
    for (std::size_t i = 0; i <= f.st_ring.size(); ++i) {
      const auto& p = f.st_ring[i % f.st_ring.size()];
      if (i) out += ' ';
      out += shortest(p.s) + ' ' + shortest(p.t);
    }
    out += "</app:textureCoordinates>\n";
    out += "            </app:TexCoordList>\n          </app:target>\n";
    out += "        </app:ParameterizedTexture>\n      </app:surfaceDataMember>\n";
  }
  out += "    </app:Appearance>\n  </app:appearanceMember>\n";
  out += "</core:CityModel>\n";
  return out;
}

}  // namespace facadeloc
