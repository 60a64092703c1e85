#!/usr/bin/env python3
"""Regenerates the 12-case fixture corpus, its images and the stub judge replies.

Run from anywhere: python3 tests/fixtures/make_fixtures.py
"""
import json
import pathlib

from PIL import Image

HERE = pathlib.Path(__file__).resolve().parent

OBJECT_CHECKLIST = [
    ("A_check_1", "A", "Does the image contain all specified objects as required by the instructions?", True),
    ("A_check_2", "A", "Are the relative arrangement and requested relations between objects correctly followed?", False),
    ("A_check_3", "A", "Are there no obviously extra or missing salient elements?", False),
    ("B_check_1", "B", "Does each object's identity strictly match its reference (e.g., category, instance)?", True),
    ("B_check_2", "B", "Are the key attributes (e.g., color, texture, shape) of each object well preserved?", False),
    ("B_check_3", "B", "Are the object details accurate and easily recognizable?", False),
    ("C_check_1", "C", "Are the spatial relationships between objects consistent with the instructions and physically plausible?", True),
    ("C_check_2", "C", "Are the relative sizes, proportions, and perspective of objects realistic?", False),
    ("D_check_1", "D", "Are objects from different reference images integrated without conflicts or contradictions?", True),
    ("D_check_2", "D", "Are style, lighting, and background consistent across composed objects?", False),
    ("G_check_1", "G", "Does the final scene appear natural, coherent, and visually plausible?", True),
    ("G_check_2", "G", "Are lighting, shadows, and global aesthetics of sufficient quality for practical use?", False),
]


def generic(extra):
    """Shared B/C/D/G checkpoints plus task-specific A checkpoints."""
    return extra + [
        ("B_check_1", "B", "Does every subject keep the identity shown in its reference image?", True),
        ("B_check_2", "B", "Are colors, textures and shapes of the subjects preserved?", False),
        ("C_check_1", "C", "Is the layout physically plausible?", True),
        ("C_check_2", "C", "Are relative sizes and perspective realistic?", False),
        ("C_check_3", "C", "Are there no broken or duplicated body parts or object parts?", False),
        ("D_check_1", "D", "Is information from all reference images combined without contradiction?", True),
        ("D_check_2", "D", "Are lighting and style consistent across the composed elements?", False),
        ("G_check_1", "G", "Does the image look natural and coherent?", True),
        ("G_check_2", "G", "Is the image free of visible artifacts?", False),
    ]


CASES = [
    ("obj_01", "object_composition",
     "Generate an image that contains both the complete giraffe and wooden chair together in a sunny park.",
     2, OBJECT_CHECKLIST),
    ("obj_02", "object_composition",
     "Generate an image that contains all three objects (violin, tabby cat, and potted cactus) together in a quiet library.",
     3, OBJECT_CHECKLIST),
    ("spa_01", "spatial_composition",
     "Generate an image that contains both the complete red bicycle and golden retriever together in a busy city street, with red bicycle positioned to the left of golden retriever.",
     2, generic([
         ("A_check_1", "A", "Is the red bicycle to the left of the golden retriever?", True),
         ("A_check_2", "A", "Are both objects fully visible?", False)])),
    ("spa_02", "spatial_composition",
     "Generate an image that contains all three objects (astronaut, ceramic teapot, and vintage camera) together in a sandy beach at sunset, with vintage camera on the left, astronaut in the center, and ceramic teapot on the right.",
     3, generic([
         ("A_check_1", "A", "Is the left-center-right order of the three objects as instructed?", True),
         ("A_check_2", "A", "Are all three objects present?", False),
         ("A_check_3", "A", "Is the scene a beach at sunset?", False)])),
    ("att_01", "attribute_disentanglement",
     "Generate an image of the golden retriever from image A, using the visual style from image B, and placing it in the snowy mountain village environment from image C.",
     3, generic([
         ("A_check_1", "A", "Is the subject taken from image A?", True),
         ("A_check_2", "A", "Is the style from image B applied?", False),
         ("A_check_3", "A", "Is the background from image C used?", False)])),
    ("att_02", "attribute_disentanglement",
     "Generate an image of the vintage camera from image A, using the visual style from image B, and placing it in the cozy living room environment from image C.",
     3, generic([
         ("A_check_1", "A", "Is the subject taken from image A?", True),
         ("A_check_2", "A", "Is the style from image B applied?", False)])),
    ("cmp_01", "component_transfer",
     "Task: Extract only the straw hat from the subject in Image A, then apply this element to the subject in Image B. Create a new composition showing the target subject wearing/displaying the straw hat.",
     2, generic([
         ("A_check_1", "A", "Does the subject from image B wear the straw hat?", True),
         ("A_check_2", "A", "Is nothing else transferred from image A?", False)])),
    ("cmp_02", "component_transfer",
     "Extract a yellow raincoat and round sunglasses from the astronaut in Image A, then apply these elements to the tabby cat on the left in Image C. Create a new composition showing the target subject(s) wearing/displaying the transferred elements.",
     3, generic([
         ("A_check_1", "A", "Does the target subject wear the raincoat and sunglasses?", True),
         ("A_check_2", "A", "Is the distractor in image B ignored?", False),
         ("A_check_3", "A", "Is the target identity preserved?", False),
         ("A_check_4", "A", "Are the transferred elements correctly sized?", False)])),
    ("fgb_01", "fg_bg_composition",
     "Generate an image where you cleanly extract the tabby cat from image A and replace the wooden chair in image B. The background from image B should remain unchanged.",
     2, generic([
         ("A_check_1", "A", "Has the wooden chair been replaced by the tabby cat?", True),
         ("A_check_2", "A", "Is the background of image B unchanged?", False)])),
    ("fgb_02", "fg_bg_composition",
     "Generate an image where you cleanly extract the red bicycle from image A and replace the potted cactus in image B. The background from image B should remain unchanged.",
     2, generic([
         ("A_check_1", "A", "Has the potted cactus been replaced by the red bicycle?", True),
         ("A_check_2", "A", "Is the background of image B unchanged?", False)])),
    ("sto_01", "story_generation",
     "Given the reference images, infer and generate a realistic photo of what might happen next.",
     2, generic([
         ("A_check_1", "A", "Does the image show a plausible next moment of the story?", True),
         ("A_check_2", "A", "Is the image a realistic photo?", False)]) + [
         ("E_check_1", "E", "Does the depicted event follow causally from the reference panels?", True),
         ("E_check_2", "E", "Is the temporal order respected?", False)]),
    ("sto_02", "story_generation",
     "Given the reference images, infer and generate a realistic photo of what might happen next.",
     3, generic([
         ("A_check_1", "A", "Does the image show a plausible next moment of the story?", True),
         ("A_check_2", "A", "Is the image a realistic photo?", False)]) + [
         ("E_check_1", "E", "Does the depicted event follow causally from the reference panels?", True),
         ("E_check_2", "E", "Is the temporal order respected?", False),
         ("E_check_3", "E", "Is the physical change consistent with the earlier panels?", False)]),
]

ANSWER_SETS = {
    "sto_01": {
        "narrative": "A child blows at a lit birthday candle.",
        "likely_outcomes": ["The candle flame is out and a thin trail of smoke rises."],
        "counterfactuals": ["The candle grows taller.", "The cake catches fire."],
    },
    "sto_02": {
        "narrative": "A glass of water is knocked toward the table edge by a cat.",
        "likely_outcomes": ["The glass falls and water spills on the floor.",
                            "The cat jumps away from the spill."],
        "counterfactuals": ["The glass floats in mid-air."],
    },
}


def color_for(name):
    h = sum(ord(c) * (i + 1) for i, c in enumerate(name))
    return (h * 37 % 256, h * 91 % 256, h * 53 % 256)


def write_png(path, name):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", (4, 4), color_for(name)).save(path, optimize=True)


def main():
    cases = []
    replies = {"verdicts": {}, "answer_scores": {}}
    for case_id, task, instruction, refs, cps in CASES:
        ref_handles = [f"refs/{case_id}_ref{k + 1}.png" for k in range(refs)]
        for h in ref_handles:
            write_png(HERE / h, h)
        write_png(HERE / "generated" / f"{case_id}.png", case_id)
        case = {
            "case_id": case_id,
            "task": task,
            "instruction": instruction,
            "reference_images": ref_handles,
            "checkpoints": [{"id": i, "dimension": d, "question": q, "hard": h} for i, d, q, h in cps],
        }
        if case_id in ANSWER_SETS:
            case["answer_set"] = ANSWER_SETS[case_id]
            replies["answer_scores"][case_id] = 10
        cases.append(case)
        replies["verdicts"][case_id] = {i: {"pass": True, "why": "satisfied"} for i, _, _, _ in cps}

    (HERE / "manifest_12.json").write_text(json.dumps({"version": 1, "cases": cases}, indent=2) + "\n")
    (HERE / "stub_all_pass.json").write_text(json.dumps(replies, indent=2) + "\n")

    injected = json.loads(json.dumps(replies))
    injected["verdicts"]["obj_01"]["B_check_1"] = {"pass": False, "why": "the chair is a stool"}
    (HERE / "stub_hard_fail_obj_01_B.json").write_text(json.dumps(injected, indent=2) + "\n")

    write_invalid(cases)


def write_invalid(cases):
    """One-case manifests breaking exactly one structural rule.

    File names are <rule>--<variant>.json; the loader must reject each one and
    name the rule.
    """
    by_id = {c["case_id"]: c for c in cases}
    out = HERE / "invalid"
    out.mkdir(exist_ok=True)

    def emit(rule, variant, case_id, mutate):
        case = json.loads(json.dumps(by_id[case_id]))
        mutate(case)
        doc = {"version": 1, "cases": [case]}
        (out / f"{rule}--{variant}.json").write_text(json.dumps(doc, indent=2) + "\n")

    def cp(case, cid):
        return next(c for c in case["checkpoints"] if c["id"] == cid)

    def five_in_b(case):
        for k in (4, 5):
            case["checkpoints"].append({"id": f"B_check_{k}", "dimension": "B", "question": "Extra?", "hard": False})

    def one_in_c(case):
        case["checkpoints"] = [c for c in case["checkpoints"] if c["id"] != "C_check_2"]

    emit("checkpoints_per_dimension", "five_in_B", "obj_01", five_in_b)
    emit("checkpoints_per_dimension", "one_in_C", "obj_01", one_in_c)
    emit("hard_checkpoint", "two_in_A", "obj_01", lambda c: cp(c, "A_check_2").update(hard=True))
    emit("hard_checkpoint", "none_in_B", "obj_01", lambda c: cp(c, "B_check_1").update(hard=False))
    emit("duplicate_checkpoint_id", "A_check_1", "obj_01", lambda c: cp(c, "A_check_2").update(id="A_check_1"))
    emit("reference_count", "object_four", "obj_02",
         lambda c: c["reference_images"].append("refs/extra.png"))
    emit("reference_count", "attribute_two", "att_01", lambda c: c["reference_images"].pop())
    emit("reference_count", "fgbg_three", "fgb_01",
         lambda c: c["reference_images"].append("refs/extra.png"))
    emit("answer_set", "story_without", "sto_01", lambda c: c.pop("answer_set"))


if __name__ == "__main__":
    main()
