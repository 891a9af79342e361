"""
Tests for model file validation and conversion
"""
import json

import numpy as np
import pytest

from src.core.comb_torsion import EulerStructure
from src.core.complexes import character_representation, lens_cw, random_chirality_complex
from src.core.errors import ValidationError
from src.models.schemas import ModelFile, load_model, parse_model, to_domain


class TestModelFile:
    """Test schema validation"""

    def test_circle(self):
        model = parse_model({"kind": "circle", "z": [0.5, 0.5]})
        loaded = to_domain(model)
        assert loaded.z == 0.5 + 0.5j
        assert loaded.twisted.dims == (1, 1)
        assert loaded.euler.lifts == {"e0": "1", "e1": "1"}

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            parse_model({"kind": "circle", "z": [2.0, 0.0], "colour": "red"})

    def test_missing_payload(self):
        with pytest.raises(ValidationError):
            parse_model({"kind": "cw"})

    def test_unexpected_payload(self):
        with pytest.raises(ValidationError):
            parse_model({"kind": "circle_bundle", "z": [2.0, 0.0], "euler": {"lifts": {}}})

    def test_bad_pair(self):
        with pytest.raises(ValidationError):
            parse_model({"kind": "circle", "z": [1.0]})

    def test_bad_orientation(self):
        with pytest.raises(ValidationError):
            parse_model({"kind": "circle", "z": [2.0, 0.0], "euler": {"lifts": {"e0": "1", "e1": "1"}, "gro": 2}})

    def test_lens_round_trip(self):
        """Test a generated lens model reloads to the same differentials"""
        cw = lens_cw(5, 1)
        rep = character_representation(5, 1, cw.presentation)
        model = ModelFile.for_cw(cw, rep, EulerStructure.trivial(cw), p=5, q=1)
        loaded = to_domain(parse_model(model.to_json()))
        assert loaded.cw.top_degree == 3
        assert loaded.metadata == {"p": 5, "q": 1}
        np.testing.assert_allclose(loaded.representation.images["t"], rep.images["t"])

    def test_random_complex(self):
        tc, ch = random_chirality_complex(3, (1, 2, 2, 1), seed=6)
        model = ModelFile.for_complex(tc, ch)
        loaded = to_domain(parse_model(json.loads(model.to_json())))
        for k in range(3):
            np.testing.assert_allclose(loaded.twisted.d(k), tc.d(k))
        assert loaded.metadata["seed"] == 6

    def test_unknown_cell_in_euler(self):
        payload = json.loads(ModelFile.for_circle(2.0).to_json())
        payload["euler"] = {"lifts": {"e0": "1", "e1": "1", "e9": "t"}}
        with pytest.raises(ValidationError):
            to_domain(parse_model(payload))


class TestLoadModel:
    """Test reading model files"""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            load_model(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            load_model(path)

    def test_circle_bundle(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(ModelFile.for_circle(2.0, bundle=True).to_json())
        loaded = load_model(path)
        assert loaded.kind == "circle_bundle"
        assert loaded.twisted is None
        assert loaded.z == 2.0
