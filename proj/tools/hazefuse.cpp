// hazefuse command line: synthetic lookup tables, solar zenith queries,
// image and filter-photo estimates, source ingestion, residual-kriging
// fusion and store exports. Exit codes: 0 success, 1 usage, 2 data error.
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hazefuse/blob.hpp"
#include "hazefuse/error.hpp"
#include "hazefuse/format.hpp"
#include "hazefuse/fusion.hpp"
#include "hazefuse/ingest.hpp"
#include "hazefuse/rg_table.hpp"
#include "hazefuse/sky.hpp"
#include "hazefuse/solar.hpp"
#include "hazefuse/store.hpp"

namespace {

using namespace hazefuse;

std::vector<double> make_axis(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) raise(ErrorCode::DomainError, "axis needs hi > lo and step > 0");
  std::vector<double> axis;
  for (double v = lo; v <= hi + 1e-12; v += step) axis.push_back(v);
  return axis;
}

GeoRect parse_bbox(const std::string& text) {
  const std::vector<std::string> cells = split(text, ',');
  if (cells.size() != 4)
    raise(ErrorCode::MalformedQuery, "bbox must be lat_min,lon_min,lat_max,lon_max");
  GeoRect r;
  if (!parse_double(trim(cells[0]), r.lat_min) || !parse_double(trim(cells[1]), r.lon_min) ||
      !parse_double(trim(cells[2]), r.lat_max) || !parse_double(trim(cells[3]), r.lon_max))
    raise(ErrorCode::MalformedQuery, "bbox has a non-numeric bound");
  if (!r.well_formed()) raise(ErrorCode::MalformedQuery, "bbox mins exceed maxes");
  return r;
}

TimeStamp now_utc() { return TimeStamp(static_cast<std::int64_t>(std::time(nullptr))); }

// Store query helper shared by fuse and export: bbox/time window default to
// everything, phenomenon optional.
std::vector<Observation> select_observations(const ObservationStore& store, const std::string& bbox,
                                             const std::string& from, const std::string& to,
                                             const std::string& phenomenon) {
  GeoRect window{-90.0, -180.0, 90.0, 180.0};
  if (!bbox.empty()) window = parse_bbox(bbox);
  TimeStamp t0(std::numeric_limits<std::int64_t>::min() / 4);
  TimeStamp t1(std::numeric_limits<std::int64_t>::max() / 4);
  if (!from.empty()) t0 = TimeStamp::parse_iso8601(from);
  if (!to.empty()) t1 = TimeStamp::parse_iso8601(to);
  std::optional<PhenomenonKind> kind;
  if (!phenomenon.empty()) kind = parse_phenomenon_kind(phenomenon);
  return store.query(window, t0, t1, kind);
}

void append_and_save(const std::filesystem::path& store_path, Observation obs) {
  ObservationStore store = ObservationStore::load_or_empty(store_path);
  const std::string id = store.insert(std::move(obs));
  store.save(store_path);
  const Observation* stored = store.find(id);
  std::cout << id << " " << to_string(stored->phenomenon) << "=" << format_double(stored->value)
            << " flag=" << to_string(stored->quality) << '\n';
}

void add_gen_table(CLI::App& app) {
  auto* cmd = app.add_subcommand("gen-table", "Write a synthetic R/G-to-AOD lookup table");
  auto out = std::make_shared<std::string>();
  auto sza_min = std::make_shared<double>(0.0);
  auto sza_max = std::make_shared<double>(85.0);
  auto sza_step = std::make_shared<double>(5.0);
  auto aod_min = std::make_shared<double>(0.0);
  auto aod_max = std::make_shared<double>(3.0);
  auto aod_step = std::make_shared<double>(0.25);
  auto params = std::make_shared<SyntheticRgParams>();
  cmd->add_option("--out", *out, "Output table path")->required();
  cmd->add_option("--sza-min", *sza_min, "First SZA node, degrees");
  cmd->add_option("--sza-max", *sza_max, "Last SZA node, degrees");
  cmd->add_option("--sza-step", *sza_step, "SZA node spacing, degrees");
  cmd->add_option("--aod-min", *aod_min, "First AOD node");
  cmd->add_option("--aod-max", *aod_max, "Last AOD node");
  cmd->add_option("--aod-step", *aod_step, "AOD node spacing");
  cmd->add_option("--b0", params->b0, "R/G at SZA 0, AOD 0");
  cmd->add_option("--b1", params->b1, "R/G base change per SZA degree");
  cmd->add_option("--s0", params->s0, "R/G slope per AOD at SZA 0");
  cmd->add_option("--s1", params->s1, "R/G slope change per SZA degree");
  cmd->callback([=]() {
    const RgTable table = generate_synthetic_table(make_axis(*sza_min, *sza_max, *sza_step),
                                                   make_axis(*aod_min, *aod_max, *aod_step), *params);
    save_rg_table(table, *out);
    std::cerr << "wrote " << *out << " (" << table.sza_axis.size() << " sza x "
              << table.aod_axis.size() << " aod nodes)\n";
  });
}

void add_sza(CLI::App& app) {
  auto* cmd = app.add_subcommand("sza", "Build a solar zenith angle table or query one");
  auto lat = std::make_shared<double>(0.0);
  auto lon = std::make_shared<double>(0.0);
  auto out = std::make_shared<std::string>();
  auto doy_step = std::make_shared<int>(5);
  auto tod_step = std::make_shared<double>(0.25);
  auto table_path = std::make_shared<std::string>();
  auto doy = std::make_shared<double>(0.0);
  auto tod = std::make_shared<double>(0.0);
  auto no_wrap = std::make_shared<bool>(false);
  auto* lat_opt = cmd->add_option("--lat", *lat, "City latitude (build mode)");
  auto* lon_opt = cmd->add_option("--lon", *lon, "City longitude (build mode)");
  auto* out_opt = cmd->add_option("--out", *out, "Table output path (build mode)");
  cmd->add_option("--doy-step", *doy_step, "Day-of-year spacing (build mode)");
  cmd->add_option("--tod-step", *tod_step, "Time-of-day spacing, hours (build mode)");
  auto* table_opt =
      cmd->add_option("--table", *table_path, "Existing table (query mode)")->check(CLI::ExistingFile);
  auto* doy_opt = cmd->add_option("--doy", *doy, "Fractional day of year (query mode)");
  auto* tod_opt = cmd->add_option("--tod", *tod, "UTC time of day, hours (query mode)");
  cmd->add_flag("--no-wrap", *no_wrap, "Reject queries outside the table axes instead of wrapping");
  cmd->callback([=]() {
    const bool build = static_cast<bool>(*out_opt);
    const bool query = static_cast<bool>(*table_opt);
    if (build == query)
      throw CLI::ValidationError("sza", "use either --lat/--lon/--out or --table/--doy/--tod");
    if (build) {
      if (!*lat_opt || !*lon_opt)
        throw CLI::ValidationError("sza", "build mode needs --lat and --lon");
      const SzaTable table = build_sza_table({*lat, *lon}, *doy_step, *tod_step);
      save_sza_table(table, *out);
      std::cerr << "wrote " << *out << " (" << table.doy_axis.size() << " doy x "
                << table.tod_axis.size() << " tod nodes)\n";
    } else {
      if (!*doy_opt || !*tod_opt)
        throw CLI::ValidationError("sza", "query mode needs --doy and --tod");
      const SzaTable table = load_sza_table(*table_path);
      std::cout << format_double(lookup_sza(table, *doy, *tod, !*no_wrap)) << '\n';
    }
  });
}

void add_estimate_image(CLI::App& app) {
  auto* cmd = app.add_subcommand("estimate-image",
                                 "Estimate AOD from a sky photo and append it to the store");
  auto image = std::make_shared<std::string>();
  auto lat = std::make_shared<double>(0.0);
  auto lon = std::make_shared<double>(0.0);
  auto time_text = std::make_shared<std::string>();
  auto sza_table = std::make_shared<std::string>();
  auto rg_table = std::make_shared<std::string>();
  auto store_path = std::make_shared<std::string>();
  auto image_id = std::make_shared<std::string>();
  auto source = std::make_shared<std::string>("AppImage");
  auto model_path = std::make_shared<std::string>();
  auto params = std::make_shared<AodPipelineParams>();
  cmd->add_option("--image", *image, "Sky photo (binary PPM)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--lat", *lat, "Capture latitude")->required();
  cmd->add_option("--lon", *lon, "Capture longitude")->required();
  cmd->add_option("--time", *time_text, "Capture time, ISO 8601 UTC")->required();
  cmd->add_option("--sza-table", *sza_table, "Solar zenith table")->required()->check(CLI::ExistingFile);
  cmd->add_option("--rg-table", *rg_table, "R/G lookup table")->required()->check(CLI::ExistingFile);
  cmd->add_option("--store", *store_path, "Observation store to append to")->required();
  cmd->add_option("--id", *image_id, "Image id recorded in provenance");
  cmd->add_option("--source", *source, "Source kind tag (AppImage, SocialImage, WebcamFrame)");
  cmd->add_option("--model", *model_path, "Optional sky classifier; rejects images scored < 0.5")
      ->check(CLI::ExistingFile);
  cmd->add_option("--sza-gate", params->sza_gate_deg, "Reject when SZA exceeds this, degrees");
  cmd->add_option("--city-halfwidth", params->city_halfwidth_deg,
                  "Accepted distance from the table's city, degrees");
  cmd->add_option("--tolerance", params->sky.color_tolerance, "Sky region color tolerance");
  cmd->add_option("--min-brightness", params->sky.min_brightness, "Sky seed brightness floor");
  cmd->add_option("--min-fraction", params->sky.min_fraction, "Minimum usable sky fraction");
  cmd->add_option("--top-band", params->sky.top_band_fraction, "Seed band height fraction");
  cmd->callback([=]() {
    const RasterImage img = load_ppm(*image);
    const TimeStamp when = TimeStamp::parse_iso8601(*time_text);
    if (!model_path->empty()) {
      const double score = classify_usable_sky(load_model(*model_path), img);
      if (score < 0.5) {
        std::cout << "unusable: classifier score " << format_fixed(score, 4) << " below 0.5\n";
        return;
      }
    }
    params->image_id = *image_id;
    const AodPipelineResult result = estimate_aod_from_image(
        img, {*lat, *lon}, when, load_sza_table(*sza_table), load_rg_table(*rg_table), *params);
    if (!result.usable()) {
      std::cout << "unusable: " << result.reason << '\n';
      return;
    }
    Observation obs;
    obs.source = parse_source_kind(*source);
    obs.phenomenon = PhenomenonKind::AOD;
    obs.value = result.estimate->aod;
    obs.location = {*lat, *lon};
    obs.time = when;
    obs.quality = result.estimate->flag;
    append_and_save(*store_path, std::move(obs));
    std::cerr << "sza=" << format_fixed(result.sza, 2)
              << " rg=" << format_fixed(result.stats.mean_rg, 4)
              << " sky_fraction=" << format_fixed(result.stats.sky_fraction, 4) << '\n';
  });
}

void add_estimate_filter(CLI::App& app) {
  auto* cmd = app.add_subcommand("estimate-filter",
                                 "Estimate PM from a paper-filter photo and append it to the store");
  auto image = std::make_shared<std::string>();
  auto calibration = std::make_shared<std::string>();
  auto lat = std::make_shared<double>(0.0);
  auto lon = std::make_shared<double>(0.0);
  auto time_text = std::make_shared<std::string>();
  auto store_path = std::make_shared<std::string>();
  auto phenomenon = std::make_shared<std::string>("PM10");
  auto polarity = std::make_shared<std::string>("dark");
  auto report = std::make_shared<std::string>();
  auto params = std::make_shared<BlobParams>();
  cmd->add_option("--image", *image, "Filter photo (binary PPM)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--calibration", *calibration, "Calibration curve file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--lat", *lat, "Exposure latitude")->required();
  cmd->add_option("--lon", *lon, "Exposure longitude")->required();
  cmd->add_option("--time", *time_text, "Exposure end time, ISO 8601 UTC")->required();
  cmd->add_option("--store", *store_path, "Observation store to append to")->required();
  cmd->add_option("--phenomenon", *phenomenon, "PM10 or PM2_5");
  cmd->add_option("--threshold", params->threshold, "Blob threshold, 0-255");
  cmd->add_option("--polarity", *polarity, "dark (blobs darker) or light");
  cmd->add_option("--min-area", params->min_area, "Minimum blob area, pixels");
  cmd->add_option("--merge-distance", params->merge_distance, "Blob merge distance, pixels");
  cmd->add_option("--connectivity", params->connectivity, "4 or 8");
  cmd->add_option("--report", *report, "Also write a blob CSV report here");
  cmd->callback([=]() {
    if (*polarity == "dark")
      params->polarity = BlobPolarity::DarkBlobs;
    else if (*polarity == "light")
      params->polarity = BlobPolarity::LightBlobs;
    else
      throw CLI::ValidationError("estimate-filter", "--polarity must be dark or light");
    const GrayImage gray = to_gray(load_ppm(*image));
    const CalibrationCurve curve = load_calibration(*calibration);
    const TimeStamp when = TimeStamp::parse_iso8601(*time_text);
    const std::vector<Blob> blobs = detect_blobs(gray, *params);
    if (!report->empty()) write_blob_report(blobs, *report);
    Observation obs =
        estimate_pm(curve, gray, *params, {*lat, *lon}, when, parse_phenomenon_kind(*phenomenon));
    append_and_save(*store_path, std::move(obs));
    std::cerr << "blobs=" << blobs.size() << '\n';
  });
}

SourceDescriptor make_descriptor(const std::string& id, const std::string& kind, double lat,
                                 double lon, const std::string& bbox, PayloadFormat format) {
  SourceDescriptor desc;
  desc.id = id;
  desc.kind = parse_source_kind(kind);
  desc.format = format;
  if (!bbox.empty())
    desc.location = parse_bbox(bbox);
  else
    desc.location = GeoPoint{lat, lon};
  return desc;
}

void store_ingest_result(const std::filesystem::path& store_path, IngestResult result) {
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
  ObservationStore store = ObservationStore::load_or_empty(store_path);
  for (Observation& obs : result.observations) {
    const std::string id = store.insert(std::move(obs));
    const Observation* stored = store.find(id);
    std::cout << id << " " << to_string(stored->phenomenon) << "="
              << format_double(stored->value) << " flag=" << to_string(stored->quality) << '\n';
  }
  store.save(store_path);
}

void add_ingest(CLI::App& app) {
  auto* cmd = app.add_subcommand("ingest", "Turn source material into observations or work items");
  cmd->require_subcommand(1);

  {
    auto* sub = cmd->add_subcommand("payload", "Structured JSON/XML payload");
    auto file = std::make_shared<std::string>();
    auto mapping = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("json");
    auto source_id = std::make_shared<std::string>("payload");
    auto kind = std::make_shared<std::string>("WebService");
    auto lat = std::make_shared<double>(0.0);
    auto lon = std::make_shared<double>(0.0);
    auto bbox = std::make_shared<std::string>();
    auto when = std::make_shared<std::string>();
    auto store_path = std::make_shared<std::string>();
    sub->add_option("--file", *file, "Payload file")->required()->check(CLI::ExistingFile);
    sub->add_option("--mapping", *mapping, "Key-path mapping file")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", *format, "json or xml");
    sub->add_option("--source-id", *source_id, "Source identifier");
    sub->add_option("--kind", *kind, "Source kind tag");
    sub->add_option("--lat", *lat, "Station latitude");
    sub->add_option("--lon", *lon, "Station longitude");
    sub->add_option("--bbox", *bbox, "Area source rectangle lat_min,lon_min,lat_max,lon_max");
    sub->add_option("--ingest-time", *when, "Ingestion time override, ISO 8601 UTC");
    sub->add_option("--store", *store_path, "Observation store to append to")->required();
    sub->callback([=]() {
      PayloadFormat fmt;
      if (*format == "json")
        fmt = PayloadFormat::Json;
      else if (*format == "xml")
        fmt = PayloadFormat::Xml;
      else
        throw CLI::ValidationError("ingest payload", "--format must be json or xml");
      std::ifstream in(*file);
      std::stringstream text;
      text << in.rdbuf();
      const TimeStamp stamp = when->empty() ? now_utc() : TimeStamp::parse_iso8601(*when);
      store_ingest_result(*store_path,
                          parse_structured_payload(text.str(), load_mapping(*mapping),
                                                   make_descriptor(*source_id, *kind, *lat, *lon,
                                                                   *bbox, fmt),
                                                   stamp));
    });
  }

  {
    auto* sub = cmd->add_subcommand("html", "Semi-structured page scraped with regex rules");
    auto file = std::make_shared<std::string>();
    auto rules = std::make_shared<std::string>();
    auto source_id = std::make_shared<std::string>("page");
    auto kind = std::make_shared<std::string>("WebSite");
    auto lat = std::make_shared<double>(0.0);
    auto lon = std::make_shared<double>(0.0);
    auto bbox = std::make_shared<std::string>();
    auto when = std::make_shared<std::string>();
    auto store_path = std::make_shared<std::string>();
    sub->add_option("--file", *file, "HTML file")->required()->check(CLI::ExistingFile);
    sub->add_option("--rules", *rules, "Extraction rules file")->required()->check(CLI::ExistingFile);
    sub->add_option("--source-id", *source_id, "Source identifier");
    sub->add_option("--kind", *kind, "Source kind tag");
    sub->add_option("--lat", *lat, "Station latitude");
    sub->add_option("--lon", *lon, "Station longitude");
    sub->add_option("--bbox", *bbox, "Area source rectangle");
    sub->add_option("--ingest-time", *when, "Ingestion time override, ISO 8601 UTC");
    sub->add_option("--store", *store_path, "Observation store to append to")->required();
    sub->callback([=]() {
      std::ifstream in(*file);
      std::stringstream text;
      text << in.rdbuf();
      const TimeStamp stamp = when->empty() ? now_utc() : TimeStamp::parse_iso8601(*when);
      store_ingest_result(
          *store_path,
          extract_from_html(text.str(), compile_rules(load_rules(*rules)),
                            make_descriptor(*source_id, *kind, *lat, *lon, *bbox,
                                            PayloadFormat::Json),
                            stamp));
    });
  }

  {
    auto* sub = cmd->add_subcommand("catalog", "Query an image catalog for work items");
    auto file = std::make_shared<std::string>();
    auto kind = std::make_shared<std::string>("SocialImage");
    auto window = std::make_shared<std::string>();
    auto tags = std::make_shared<std::string>();
    auto from = std::make_shared<std::string>();
    auto to = std::make_shared<std::string>();
    sub->add_option("--file", *file, "Catalog sidecar file")->required()->check(CLI::ExistingFile);
    sub->add_option("--kind", *kind, "Source kind of the catalog");
    sub->add_option("--window", *window, "Rectangle lat_min,lon_min,lat_max,lon_max")->required();
    sub->add_option("--tags", *tags, "Comma-separated tags; switches to the tag query");
    sub->add_option("--from", *from, "Window start, ISO 8601 UTC")->required();
    sub->add_option("--to", *to, "Window end, ISO 8601 UTC")->required();
    sub->callback([=]() {
      const std::vector<ImageMeta> catalog = load_catalog(*file, parse_source_kind(*kind));
      const GeoRect rect = parse_bbox(*window);
      const TimeStamp t0 = TimeStamp::parse_iso8601(*from);
      const TimeStamp t1 = TimeStamp::parse_iso8601(*to);
      std::vector<ImageMeta> hits;
      if (tags->empty()) {
        hits = query_geotagged_images(catalog, rect, t0, t1);
      } else {
        std::vector<std::string> tag_list;
        for (const std::string& t : split(*tags, ','))
          if (!trim(t).empty()) tag_list.push_back(trim(t));
        hits = query_tagged_images(catalog, tag_list, t0, t1);
      }
      // Tag-matched items without coordinates are mapped to the window
      // centroid and marked suspect; geotagged ones pass through as-is.
      for (const ImageMeta& m : hits) {
        const GeoPoint p = m.location ? *m.location : rect.centroid();
        std::cout << m.id << '|' << m.path << '|' << format_fixed(p.lat, 6) << '|'
                  << format_fixed(p.lon, 6) << '|' << m.time.to_iso8601() << '|'
                  << (m.location ? "Ok" : "Suspect") << '\n';
      }
    });
  }
}

void add_fuse(CLI::App& app) {
  auto* cmd = app.add_subcommand("fuse", "Fuse store observations with a base map");
  auto store_path = std::make_shared<std::string>();
  auto basemap_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto phenomenon = std::make_shared<std::string>("PM10");
  auto bbox = std::make_shared<std::string>();
  auto from = std::make_shared<std::string>();
  auto to = std::make_shared<std::string>();
  auto kind = std::make_shared<std::string>("Exponential");
  auto nugget = std::make_shared<double>(0.0);
  auto sill = std::make_shared<double>(0.0);
  auto range = std::make_shared<double>(0.0);
  auto geojson = std::make_shared<std::string>();
  auto csv = std::make_shared<std::string>();
  cmd->add_option("--store", *store_path, "Observation store")->required()->check(CLI::ExistingFile);
  cmd->add_option("--basemap", *basemap_path, "Base map file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", *out, "Fused map output; variance goes to <out>.var")->required();
  cmd->add_option("--phenomenon", *phenomenon, "Phenomenon to fuse");
  cmd->add_option("--bbox", *bbox, "Restrict observations to this rectangle");
  cmd->add_option("--from", *from, "Restrict observations to times >= this");
  cmd->add_option("--to", *to, "Restrict observations to times <= this");
  cmd->add_option("--kind", *kind, "Variogram kind: Exponential or Spherical");
  auto* nugget_opt = cmd->add_option("--nugget", *nugget, "Variogram nugget (explicit model)");
  auto* sill_opt = cmd->add_option("--sill", *sill, "Variogram sill (explicit model)");
  auto* range_opt = cmd->add_option("--range", *range, "Variogram range, degrees (explicit model)");
  cmd->add_option("--geojson", *geojson, "Also export GeoJSON here");
  cmd->add_option("--csv", *csv, "Also export CSV here");
  cmd->callback([=]() {
    const int given = (*nugget_opt ? 1 : 0) + (*sill_opt ? 1 : 0) + (*range_opt ? 1 : 0);
    if (given != 0 && given != 3)
      throw CLI::ValidationError("fuse", "--nugget, --sill and --range must be given together");
    std::optional<VariogramModel> model;
    if (given == 3) {
      VariogramKind vk;
      if (*kind == "Exponential")
        vk = VariogramKind::Exponential;
      else if (*kind == "Spherical")
        vk = VariogramKind::Spherical;
      else
        throw CLI::ValidationError("fuse", "--kind must be Exponential or Spherical");
      model = VariogramModel{vk, *nugget, *sill, *range};
      model->check();
    }
    const ObservationStore store = ObservationStore::load(*store_path);
    const std::vector<Observation> obs =
        select_observations(store, *bbox, *from, *to, *phenomenon);
    const BaseMap basemap = load_basemap(*basemap_path);
    std::vector<std::string> warnings;
    const FusedMap fused = residual_kriging_fuse(obs, basemap, model, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
    save_map(fused.grid, fused.values, *out);
    save_map(fused.grid, fused.variance, *out + ".var");
    if (!geojson->empty()) export_geojson(fused, *geojson);
    if (!csv->empty()) export_csv(fused, *csv);
    std::cerr << "fused " << obs.size() << " observations onto " << fused.grid.rows << "x"
              << fused.grid.cols << " grid\n";
  });
}

void add_export(CLI::App& app) {
  auto* cmd = app.add_subcommand("export", "Write store query results as CSV");
  auto store_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto phenomenon = std::make_shared<std::string>();
  auto bbox = std::make_shared<std::string>();
  auto from = std::make_shared<std::string>();
  auto to = std::make_shared<std::string>();
  cmd->add_option("--store", *store_path, "Observation store")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", *out, "CSV output path; standard output when omitted");
  cmd->add_option("--phenomenon", *phenomenon, "Filter: phenomenon");
  cmd->add_option("--bbox", *bbox, "Filter: rectangle lat_min,lon_min,lat_max,lon_max");
  cmd->add_option("--from", *from, "Filter: times >= this");
  cmd->add_option("--to", *to, "Filter: times <= this");
  cmd->callback([=]() {
    const ObservationStore store = ObservationStore::load(*store_path);
    const std::vector<Observation> rows =
        select_observations(store, *bbox, *from, *to, *phenomenon);
    std::ostringstream text;
    text << "id,source,phenomenon,value,lat,lon,time,quality\n";
    for (const Observation& o : rows)
      text << o.id << ',' << to_string(o.source) << ',' << to_string(o.phenomenon) << ','
           << format_double(o.value) << ',' << format_fixed(o.location.lat, 6) << ','
           << format_fixed(o.location.lon, 6) << ',' << o.time.to_iso8601() << ','
           << to_string(o.quality) << '\n';
    if (out->empty()) {
      std::cout << text.str();
    } else {
      std::ofstream file(*out);
      if (!file) raise(ErrorCode::IoFailure, "cannot write " + *out);
      file << text.str();
      if (!file) raise(ErrorCode::IoFailure, "failed writing " + *out);
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hazefuse: community air-quality measurements, fused onto city maps"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with `key = value` lines; flags win");

  add_gen_table(app);
  add_sza(app);
  add_estimate_image(app);
  add_estimate_filter(app);
  add_ingest(app);
  add_fuse(app);
  add_export(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const hazefuse::Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
