import logging
from dataclasses import replace

import numpy as np
import pytest

from src.beam_optics import (CouplingMap, FpaTerminal, TerminalPose, collimate, pair_coupling,
                             rayleigh_range, simulate_coupling_map)
from src.fpa_geometry import CollimatorSpec, HexLattice
from src.utils.errors import DomainError


def make_terminal(z: float = 0.0, error=(0.0, 0.0), excess: float = 0.0,
                  subset=None) -> FpaTerminal:
    return FpaTerminal(pose=TerminalPose((0.0, 0.0, z), error, excess), subset_size=subset)


def test_collimated_beam_diameter():
    beam = collimate(HexLattice(), CollimatorSpec())
    assert beam.diameter_m == pytest.approx(35.2e-3, abs=0.1e-3)
    assert abs(beam.diameter_m - 32e-3) / 32e-3 < 0.15
    assert rayleigh_range(beam) > 63.0


def test_aligned_terminals_best_pair_is_center():
    coupling_map = simulate_coupling_map(make_terminal(), make_terminal(6.0), 6.0)
    tx_id, rx_id, loss = coupling_map.best_pair()
    assert (tx_id, rx_id) == (31, 31)
    assert loss == pytest.approx(0.0, abs=1e-9)
    assert coupling_map.loss_db.shape == (61, 61)


def test_coupling_is_reciprocal():
    a = make_terminal(0.0, (120e-6, -40e-6), 1.0)
    b = make_terminal(6.0, (-30e-6, 55e-6), 2.0)
    for tx_id, rx_id in [(31, 31), (32, 30), (5, 57), (12, 40)]:
        forward = pair_coupling(a, tx_id, b, rx_id, 6.0)
        backward = pair_coupling(b, rx_id, a, tx_id, 6.0)
        assert forward == pytest.approx(backward, rel=1e-12)


def test_excess_losses_are_additive():
    base = pair_coupling(make_terminal(), 32, make_terminal(6.0), 31, 6.0)
    lossy = pair_coupling(make_terminal(excess=2.0), 32, make_terminal(6.0, excess=3.0), 31, 6.0)
    assert lossy - base == pytest.approx(5.0)


def test_pair_coupling_matches_map():
    tx, rx = make_terminal(0.0, (300e-6, -80e-6)), make_terminal(6.0, (-34e-6, 70e-6))
    coupling_map = simulate_coupling_map(tx, rx, 6.0, tx_ids=[31, 32], rx_ids=[30, 31])
    assert coupling_map.loss(32, 31) == pytest.approx(pair_coupling(tx, 32, rx, 31, 6.0))


def test_invalid_distance_and_pose():
    with pytest.raises(DomainError):
        pair_coupling(make_terminal(), 31, make_terminal(), 31, 0.0)
    with pytest.raises(DomainError):
        TerminalPose(excess_loss_db=-1.0)
    with pytest.raises(DomainError):
        simulate_coupling_map(make_terminal(), make_terminal(6.0), 6.0, tx_ids=[])


def test_far_field_warning(caplog):
    with caplog.at_level(logging.WARNING):
        pair_coupling(make_terminal(), 31, make_terminal(1000.0), 31, 1000.0)
    assert any("Релея" in record.message for record in caplog.records)


def test_calibrated_indoor_map(indoor_scenario):
    coupling_map = indoor_scenario.coupling_map()
    tx_id, rx_id, loss = coupling_map.best_pair()
    assert (tx_id, rx_id) == (32, 31)
    assert tx_id != 31
    assert loss == pytest.approx(15.5, abs=0.1)
    assert len(coupling_map.tx_ids) == 31
    assert len(coupling_map.rx_ids) == 61


def test_second_best_rx_is_strongly_suppressed(indoor_scenario):
    coupling_map = indoor_scenario.coupling_map()
    tx_id, _, _ = coupling_map.best_pair()
    ordered = np.sort(coupling_map.rx_slice(tx_id))
    assert ordered[1] - ordered[0] >= 14.4


def test_coupling_map_rows_and_dict():
    coupling_map = CouplingMap([31], [30, 31], np.array([[1.23456, np.nan]]), 6.0)
    header, rows = coupling_map.to_rows()
    assert header == ["tx\\rx", "30", "31"]
    assert rows == [["31", "1.235", "nan"]]
    assert coupling_map.to_dict()["loss_db"] == [[1.235, None]]
    with pytest.raises(DomainError):
        CouplingMap([31], [30], np.zeros((2, 2)), 6.0)


def test_lateral_displacement_changes_coupling():
    tx = make_terminal()
    shifted = replace(make_terminal(6.0), pose=TerminalPose((5e-3, 0.0, 6.0)))
    assert pair_coupling(tx, 31, shifted, 31, 6.0) > 0.0


def test_loss_grows_with_lateral_offset():
    tx = make_terminal()
    losses = [pair_coupling(tx, 31, replace(make_terminal(6.0), pose=TerminalPose((dx, 0.0, 6.0))),
                            31, 6.0)
              for dx in [0.0, 1e-3, -2e-3, 4e-3, -8e-3]]
    assert losses[0] == pytest.approx(0.0, abs=1e-12)
    assert all(a < b for a, b in zip(losses, losses[1:]))


def test_loss_grows_with_angular_error():
    losses = []
    for error in [0.0, 5e-6, -10e-6, 20e-6, -40e-6]:
        tx = make_terminal(0.0, (error, 0.0))
        rx = make_terminal(6.0, (error, 0.0))
        losses.append(pair_coupling(tx, 31, rx, 31, 6.0))
    assert all(a < b for a, b in zip(losses, losses[1:]))


@pytest.mark.parametrize("steps", [-2, -1, 1, 3])
def test_boresight_error_of_whole_steps_moves_best_element(steps):
    lattice = HexLattice()
    error = steps * lattice.pitch_m / CollimatorSpec().focal_length_m
    coupling_map = simulate_coupling_map(make_terminal(0.0, (error, 0.0)), make_terminal(6.0), 6.0)
    tx_id, rx_id, loss = coupling_map.best_pair()
    assert tx_id == lattice.index_at(steps, 0).id == 31 + steps
    assert rx_id == 31
    assert loss == pytest.approx(0.0, abs=1e-9)


def test_aligned_map_is_point_symmetric():
    coupling_map = simulate_coupling_map(make_terminal(), make_terminal(6.0), 6.0)
    # Номер id відбивається у 62 − id
    np.testing.assert_allclose(coupling_map.loss_db, coupling_map.loss_db[::-1, ::-1],
                               rtol=1e-9, atol=1e-12)


def test_half_step_error_at_63_m():
    # Половина кроку на кожному терміналі: кути компенсуються, лишається знос 7.75 мм
    tx = make_terminal(0.0, (123e-6, 0.0), 2.0)
    rx = make_terminal(63.0, (-123e-6, 0.0), 2.0)
    assert pair_coupling(tx, 31, rx, 31, 63.0) == pytest.approx(4.84, abs=0.01)
    coupling_map = simulate_coupling_map(tx, rx, 63.0)
    assert coupling_map.best_pair()[2] == pytest.approx(4.84, abs=0.01)
