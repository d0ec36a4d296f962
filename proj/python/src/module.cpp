#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "boundline/assessment.hpp"
#include "boundline/contours.hpp"
#include "boundline/delineation.hpp"
#include "boundline/error.hpp"
#include "boundline/geojson.hpp"
#include "boundline/pipeline.hpp"
#include "boundline/raster.hpp"
#include "boundline/superpixels.hpp"
#include "boundline/vectornet.hpp"

namespace py = pybind11;
using namespace boundline;

namespace {

using Coords = std::vector<std::pair<double, double>>;

Polyline to_polyline(const Coords& c) {
  Polyline p;
  for (const auto& [x, y] : c) p.points.push_back({x, y});
  return p;
}

Coords to_coords(const Polyline& p) {
  Coords c;
  for (const Point& q : p.points) c.emplace_back(q.x, q.y);
  return c;
}

std::vector<Polyline> to_polylines(const std::vector<Coords>& lines) {
  std::vector<Polyline> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back(to_polyline(lines[i]));
    out.back().id = static_cast<std::int64_t>(i);
  }
  return out;
}

std::vector<Coords> to_coords(const std::vector<Polyline>& lines) {
  std::vector<Coords> out;
  for (const auto& l : lines) out.push_back(to_coords(l));
  return out;
}

py::array_t<float> to_array(const ScalarGrid& g) {
  py::array_t<float> a({g.height, g.width});
  std::copy(g.values.begin(), g.values.end(), a.mutable_data());
  return a;
}

ImageGrid image_from_array(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> rgb,
                           const GeoTransform& t) {
  if (rgb.ndim() != 3 || rgb.shape(2) != 3) throw Error(ErrorKind::Dimension, "expected an (H, W, 3) uint8 array");
  ImageGrid img;
  img.height = static_cast<int>(rgb.shape(0));
  img.width = static_cast<int>(rgb.shape(1));
  img.rgb.assign(rgb.data(), rgb.data() + rgb.size());
  img.transform = t;
  return img;
}

py::array_t<std::uint8_t> image_to_array(const ImageGrid& img) {
  py::array_t<std::uint8_t> a({img.height, img.width, 3});
  std::copy(img.rgb.begin(), img.rgb.end(), a.mutable_data());
  return a;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_boundline, m) {
  m.doc() = "Cadastral boundary delineation: contours, superpixels, line networks and assessment.";

  static py::exception<Error> error(m, "BoundlineError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<GeoTransform>(m, "GeoTransform")
      .def(py::init<>())
      .def_static("from_world_file", [](const std::array<double, 6>& v) { return GeoTransform::from_array(v); })
      .def_readwrite("origin_x", &GeoTransform::origin_x)
      .def_readwrite("origin_y", &GeoTransform::origin_y)
      .def_readwrite("pixel_size_x", &GeoTransform::pixel_size_x)
      .def_readwrite("pixel_size_y", &GeoTransform::pixel_size_y)
      .def_readwrite("rotation_x", &GeoTransform::rotation_x)
      .def_readwrite("rotation_y", &GeoTransform::rotation_y)
      .def("pixel_to_world", [](const GeoTransform& t, double c, double r) {
        const Point p = t.pixel_to_world(c, r);
        return std::make_pair(p.x, p.y);
      })
      .def("world_to_pixel", [](const GeoTransform& t, double x, double y) {
        const Point p = t.world_to_pixel({x, y});
        return std::make_pair(p.x, p.y);
      })
      .def("to_world_file", &GeoTransform::to_array)
      .def_property_readonly("gsd", &GeoTransform::gsd);

  m.def("read_world_file", &read_world_file, py::arg("path"));
  m.def("parse_world_file", &parse_world_file, py::arg("text"));
  m.def(
      "load_image",
      [](const std::filesystem::path& image, const std::filesystem::path& world) {
        const ImageGrid img = load_image(image, world);
        return py::make_tuple(image_to_array(img), img.transform);
      },
      py::arg("image"), py::arg("world_file"), "Returns (rgb array, GeoTransform).");

  m.def("srgb_to_lab", [](int r, int g, int b) {
    const Lab l = srgb_to_lab(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b));
    return py::make_tuple(l.l, l.a, l.b);
  });

  m.def(
      "detect_contours",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> rgb, const GeoTransform& t,
         double threshold, bool spectral, int max_dim) {
        CueParams p;
        p.threshold = threshold;
        p.spectral = spectral;
        p.max_dim = max_dim;
        const ImageGrid img = image_from_array(rgb, t);
        ContourResult r;
        {
          py::gil_scoped_release release;
          r = detect_contours(rgb_to_lab(img), p);
        }
        py::dict out;
        out["probability"] = to_array(r.probability);
        out["ucm"] = to_array(r.ucm);
        out["outlines"] = to_coords(r.outlines);
        out["transform"] = r.probability.transform;
        out["downscale_factor"] = r.downscale_factor;
        return out;
      },
      py::arg("rgb"), py::arg("transform"), py::arg("threshold") = 0.3, py::arg("spectral") = true,
      py::arg("max_dim") = kDefaultMaxDim);

  m.def(
      "slic",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> rgb, const GeoTransform& t,
         int region_size, double compactness, int iterations) {
        SlicParams p;
        p.region_size = region_size;
        p.compactness = compactness;
        p.iterations = iterations;
        const ImageGrid img = image_from_array(rgb, t);
        p = resolve_slic_params(p, img.transform);
        LabelMap labels;
        std::vector<Polyline> outlines;
        {
          py::gil_scoped_release release;
          labels = slic(rgb_to_lab(img), p);
          outlines = superpixel_outlines(labels);
        }
        py::array_t<int> a({labels.height, labels.width});
        std::copy(labels.labels.begin(), labels.labels.end(), a.mutable_data());
        return py::make_tuple(a, to_coords(outlines));
      },
      py::arg("rgb"), py::arg("transform"), py::arg("region_size") = 0, py::arg("compactness") = 10.0,
      py::arg("iterations") = 10, "Returns (labels, outlines).");

  m.def(
      "buffer_filter",
      [](const std::vector<Coords>& lines, const std::vector<Coords>& reference, double radius) {
        return to_coords(buffer_filter(to_polylines(lines), to_polylines(reference), radius).lines);
      },
      py::arg("lines"), py::arg("reference"), py::arg("radius"));
  m.def(
      "clean_topology",
      [](const std::vector<Coords>& lines, double snap_tol, double min_dangle) {
        return to_coords(clean_topology(to_polylines(lines), snap_tol, min_dangle));
      },
      py::arg("lines"), py::arg("snap_tol") = 0.05, py::arg("min_dangle") = 0.5);

  py::class_<LineNetwork>(m, "LineNetwork")
      .def_property_readonly("nodes",
                             [](const LineNetwork& n) {
                               std::vector<std::pair<double, double>> out;
                               for (const Point& p : n.nodes) out.emplace_back(p.x, p.y);
                               return out;
                             })
      .def_property_readonly("edges",
                             [](const LineNetwork& n) {
                               py::list out;
                               for (const auto& e : n.edges)
                                 out.append(py::dict(py::arg("edge_id") = e.id, py::arg("node_a") = e.node_a,
                                                     py::arg("node_b") = e.node_b, py::arg("length_m") = e.length,
                                                     py::arg("coordinates") = to_coords(e.geometry)));
                               return out;
                             })
      .def("degrees", &LineNetwork::degrees)
      .def("total_length", &LineNetwork::total_length)
      .def("to_geojson", [](const LineNetwork& n) { return json_to_py(network_to_geojson(n)); });

  m.def(
      "build_network", [](const std::vector<Coords>& lines) { return build_network(to_polylines(lines)); },
      py::arg("lines"));

  m.def(
      "run_pipeline",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> rgb, const GeoTransform& t,
         double buffer_radius, bool spectral) {
        PipelineParams p;
        p.buffer_radius = buffer_radius;
        p.cues.spectral = spectral;
        const ImageGrid img = image_from_array(rgb, t);
        py::gil_scoped_release release;
        return run_pipeline(img, p).network;
      },
      py::arg("rgb"), py::arg("transform"), py::arg("buffer_radius") = 5.0, py::arg("spectral") = true,
      "Automatic network generation; returns the LineNetwork.");

  m.def(
      "connect_nodes",
      [](const LineNetwork& net, const std::vector<int>& terminals) {
        const CandidateLine c = connect_nodes(net, terminals);
        return json_to_py(candidate_to_json(c));
      },
      py::arg("network"), py::arg("terminals"));

  m.def(
      "sinuosity", [](const Coords& line) { return sinuosity(to_polyline(line)); }, py::arg("line"));
  m.def(
      "classify_sinuosity", [](double s) { return std::string(to_string(classify_sinuosity(s))); }, py::arg("s"));
  m.def(
      "simplify_line", [](const Coords& line, double tol) { return to_coords(simplify_line(to_polyline(line), tol)); },
      py::arg("line"), py::arg("tolerance"));

  m.def(
      "assess",
      [](const std::vector<Coords>& delineated, const std::vector<Coords>& reference, double gsd,
         const std::vector<double>& distances) {
        AssessmentConfig cfg;
        cfg.distances = distances;
        const auto del = to_polylines(delineated);
        const auto ref = to_polylines(reference);
        BBox box = bounds(ref);
        const BBox dbox = bounds(del);
        if (!dbox.empty()) {
          box.expand({dbox.min_x, dbox.min_y});
          box.expand({dbox.max_x, dbox.max_y});
        }
        cfg.validate();
        const GridSpec grid = grid_for_bounds(box, gsd, 2 + static_cast<int>(std::ceil(distances.back() / gsd)));
        return json_to_py(report_to_json(confusion_series(rasterize_lines(del, grid), rasterize_lines(ref, grid), cfg)));
      },
      py::arg("delineated"), py::arg("reference"), py::arg("gsd") = 0.05,
      py::arg("distances") = std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
}
