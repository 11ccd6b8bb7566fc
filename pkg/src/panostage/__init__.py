"""Photometric HDR panorama calibration and virtual kitchen staging."""

from panostage.errors import NumericError, ValidationError
from panostage.image import (
    ExposureBracket,
    HdrPanorama,
    LuminanceMap,
    luminance_map,
    merge_brackets,
    scale_radiance,
)
from panostage.projection import (
    OrthographicFisheye,
    PerspectiveView,
    SphericalDirection,
    crop_front_hemisphere,
    dir_to_pixel,
    equirect_to_orthographic,
    pano_to_perspective,
    pixel_to_dir,
)
from panostage.photometry import (
    CalibrationResult,
    ErrorStats,
    PhotometricRecord,
    calibrate_pair,
    calibration_factor,
    error_stats,
    illuminance_from_fisheye,
    uniform_luminance,
)
from panostage.layout import (
    CornerPolicy,
    KitchenComponent,
    LayoutType,
    PlacementPlan,
    PlacementTransform,
    RoomLayout,
    apply_transform,
    classify_layout,
    place_components,
    select_kitchen_walls,
    validate_plan,
)
from panostage.scene import (
    IrradianceProbe,
    ProbeResult,
    SceneDescription,
    assemble_scene,
    export_scene,
    import_scene,
    irradiance_probe,
    preview_render,
)
from panostage.dataset import SceneEntry, dataset_stats, load_manifest, save_manifest

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "CornerPolicy",
    "ErrorStats",
    "ExposureBracket",
    "HdrPanorama",
    "IrradianceProbe",
    "KitchenComponent",
    "LayoutType",
    "LuminanceMap",
    "NumericError",
    "OrthographicFisheye",
    "PerspectiveView",
    "PhotometricRecord",
    "PlacementPlan",
    "PlacementTransform",
    "ProbeResult",
    "RoomLayout",
    "SceneDescription",
    "SceneEntry",
    "SphericalDirection",
    "ValidationError",
    "apply_transform",
    "assemble_scene",
    "calibrate_pair",
    "calibration_factor",
    "classify_layout",
    "crop_front_hemisphere",
    "dataset_stats",
    "dir_to_pixel",
    "equirect_to_orthographic",
    "error_stats",
    "export_scene",
    "illuminance_from_fisheye",
    "import_scene",
    "irradiance_probe",
    "load_manifest",
    "luminance_map",
    "merge_brackets",
    "pano_to_perspective",
    "pixel_to_dir",
    "place_components",
    "preview_render",
    "save_manifest",
    "scale_radiance",
    "select_kitchen_walls",
    "uniform_luminance",
    "validate_plan",
]
