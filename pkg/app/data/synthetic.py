"""
Синтетические личности: генерация атрибутов и отрисовка видов
"""
import colorsys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from loguru import logger

from app.data.imageio import write_ppm

HEIGHT, WIDTH = 160, 60
HUE_PALETTE = tuple(range(0, 360, 30))
SATURATION, VALUE = 0.8, 0.8
BAG_SIZE = (24, 14)  # строки x столбцы при масштабе 1
HARD_CASE_SHARE = 0.25
MANIFEST = "manifest.txt"


@dataclass(frozen=True)
class Identity:
    """Параметры синтетического человека"""
    id: int
    torso_hue: float
    leg_hue: float
    skin_tone: float
    has_bag: bool
    bag_hue: float
    build_width: float

    def attributes(self) -> Tuple:
        return (self.torso_hue, self.leg_hue, round(self.skin_tone, 3), self.has_bag,
                self.bag_hue if self.has_bag else None, round(self.build_width, 3))

    def manifest_line(self) -> str:
        fields = asdict(self)
        ident = fields.pop("id")
        parts = [f"{key}={int(value) if isinstance(value, bool) else round(value, 4)}" for key, value in fields.items()]
        return f"{ident:04d} " + " ".join(parts)


def generate_identities(count: int, seed: int = 0) -> List[Identity]:
    """
    Оттенки берутся из грубой палитры, поэтому цвета одежды повторяются.
    Четверть личностей копирует одежду предыдущей и отличается только сумкой.
    """
    if count < 1:
        raise ValueError("нужна хотя бы одна личность")
    rng = np.random.default_rng(seed)
    people: List[Identity] = []
    seen = set()
    while len(people) < count:
        ident = len(people)
        if people and rng.random() < HARD_CASE_SHARE:
            base = people[int(rng.integers(len(people)))]
            bag = not base.has_bag if rng.random() < 0.5 else True
            bag_hue = float(rng.choice([h for h in HUE_PALETTE if h != base.bag_hue]))
            candidate = Identity(ident, base.torso_hue, base.leg_hue, base.skin_tone, bag, bag_hue, base.build_width)
        else:
            candidate = Identity(
                id=ident,
                torso_hue=float(rng.choice(HUE_PALETTE)),
                leg_hue=float(rng.choice(HUE_PALETTE)),
                skin_tone=float(rng.uniform(0.35, 0.85)),
                has_bag=bool(rng.random() < 0.5),
                bag_hue=float(rng.choice(HUE_PALETTE)),
                build_width=float(rng.uniform(0.5, 0.7)),
            )
        if candidate.attributes() in seen:
            continue
        seen.add(candidate.attributes())
        people.append(candidate)
    return people


def hue_color(hue: float, saturation: float = SATURATION, value: float = VALUE) -> np.ndarray:
    return np.array(colorsys.hsv_to_rgb(hue / 360.0, saturation, value))


def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    """(3, H, W) -> (3, H, W): оттенок в градусах, насыщенность, яркость"""
    r, g, b = image
    high = image.max(axis=0)
    low = image.min(axis=0)
    delta = high - low
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.where(
        high == r, ((g - b) / safe) % 6,
        np.where(high == g, (b - r) / safe + 2, (r - g) / safe + 4)
    ) * 60.0
    hue = np.where(delta > 0, hue, 0.0)
    saturation = np.where(high > 0, delta / np.where(high > 0, high, 1.0), 0.0)
    return np.stack([hue, saturation, high])


def hue_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 360.0
    return np.minimum(d, 360.0 - d)


def render_view(identity: Identity, camera_seed: int, height: int = HEIGHT, width: int = WIDTH) -> np.ndarray:
    """
    Один вид: голова, торс, ноги и сумка поверх шумного фона.
    Сдвиг ±15% ширины, масштаб 0.8-1.0, сумка смещается вдоль торса,
    яркость ±20%.
    """
    rng = np.random.default_rng([identity.id, camera_seed])
    sy, sx = height / HEIGHT, width / WIDTH
    scale = rng.uniform(0.8, 1.0)
    shift = rng.uniform(-0.15, 0.15) * width
    brightness = rng.uniform(0.8, 1.2)
    bag_offset = rng.uniform(-1.0, 1.0)

    gray = rng.uniform(0.3, 0.7)
    image = np.full((3, height, width), gray) + rng.normal(0.0, 0.02, size=(3, height, width))
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]

    cx = width / 2 + shift
    mid = 80 * sy
    half = identity.build_width * (WIDTH / 2) * scale * sx

    def paint(mask: np.ndarray, color: np.ndarray):
        image[:, mask] = color[:, None]

    torso_top, torso_bottom = mid - 46 * scale * sy, mid + 6 * scale * sy
    leg_bottom = mid + 66 * scale * sy
    head_y, head_r = mid - 58 * scale * sy, 10 * scale * min(sy, sx)

    skin = np.array(colorsys.hsv_to_rgb(25 / 360.0, 0.35, identity.skin_tone))
    paint((rows - head_y) ** 2 + (cols - cx) ** 2 <= head_r ** 2, skin)
    paint((rows >= torso_top) & (rows <= torso_bottom) & (np.abs(cols - cx) <= half), hue_color(identity.torso_hue))
    leg_half = 0.4 * half
    legs = (rows > torso_bottom) & (rows <= leg_bottom) & (
        (np.abs(cols - (cx - 0.5 * half)) <= leg_half) | (np.abs(cols - (cx + 0.5 * half)) <= leg_half)
    )
    paint(legs, hue_color(identity.leg_hue))

    if identity.has_bag:
        bag_h, bag_w = BAG_SIZE[0] * scale * sy, BAG_SIZE[1] * scale * sx
        bag_x = np.clip(cx + bag_offset * half, bag_w / 2, width - 1 - bag_w / 2)
        bag_y = mid - 18 * scale * sy
        bag = (np.abs(rows - bag_y) <= bag_h / 2) & (np.abs(cols - bag_x) <= bag_w / 2)
        paint(bag, hue_color(identity.bag_hue))

    return np.clip(image * brightness, 0.0, 1.0)


def camera_seed(seed: int, camera: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, camera, index]).generate_state(1)[0])


def write_synthetic_dataset(
    root: Union[str, Path],
    identities: int,
    cameras: int = 2,
    views_per_camera: int = 2,
    seed: int = 0
) -> Dict[str, int]:
    """root/<id>/c<камера>_<номер>.ppm и manifest.txt (личность -> атрибуты)"""
    if cameras < 1 or views_per_camera < 1:
        raise ValueError("нужны хотя бы одна камера и один вид")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    people = generate_identities(identities, seed)

    images = 0
    for person in people:
        for camera in range(cameras):
            for index in range(views_per_camera):
                view = render_view(person, camera_seed(seed, camera, index))
                write_ppm(root / f"{person.id:04d}" / f"c{camera}_{index:02d}.ppm", view)
                images += 1

    (root / MANIFEST).write_text("\n".join(p.manifest_line() for p in people) + "\n", encoding="utf-8")
    logger.info(f"✅ Синтетический набор: {len(people)} личностей, {images} изображений -> {root}")
    return {"identities": len(people), "images": images}
