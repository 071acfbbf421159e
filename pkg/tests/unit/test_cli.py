import pytest
from unittest.mock import AsyncMock

from qglab.cli import EXIT_ERROR, EXIT_FAILED, EXIT_OK, main, overrides_from_args, parse_args


def test_parse_experiment_arguments():
    """Test flag parsing into config overrides."""
    args = parse_args(
        ["resolvent-compare", "--z", "1j", "2+0.5j", "--ell-list", "0.2", "0.1", "--potential", "well:depth=2"]
    )
    overrides = overrides_from_args(args)
    assert overrides["z"] == [1j, 2 + 0.5j]
    assert overrides["ell_list"] == [0.2, 0.1]
    assert overrides["potential"] == {"label": "well", "params": {"depth": 2.0}}
    assert overrides["radius"] is None


def test_command_is_required():
    with pytest.raises(SystemExit):
        parse_args([])


@pytest.mark.asyncio
@pytest.mark.parametrize("passed,code", [(True, EXIT_OK), (False, EXIT_FAILED)])
async def test_exit_codes(mocker, tmp_path, sample_report, passed, code):
    """Test that the exit code follows the acceptance criteria."""
    report = sample_report.model_copy(update={"criteria": {"vertex_condition": passed}})
    command = AsyncMock(return_value=report)
    mocker.patch.dict("qglab.cli.COMMANDS", {"resolvent-compare": command})
    assert await main(["resolvent-compare", "--out-dir", str(tmp_path)]) == code
    config = command.call_args[0][0]
    assert config.out_dir == str(tmp_path)


@pytest.mark.asyncio
async def test_real_z_is_an_error(tmp_path):
    """Test that a precondition failure exits with 2."""
    assert await main(["lemma-check", "--z", "2", "--out-dir", str(tmp_path)]) == EXIT_ERROR


@pytest.mark.asyncio
async def test_invalid_config_is_an_error(tmp_path):
    assert await main(["lemma-check", "--ell-list", "0.1", "0.2", "--out-dir", str(tmp_path)]) == EXIT_ERROR


@pytest.mark.asyncio
async def test_report_without_files(tmp_path):
    assert await main(["report", "--out-dir", str(tmp_path)]) == EXIT_ERROR


@pytest.mark.asyncio
async def test_report_prints_summary(tmp_path, capsys, storage, sample_report):
    path = await storage.save_report(sample_report)
    assert await main(["report", path, "--out-dir", str(tmp_path), "--prefix", "merged"]) == EXIT_OK
    assert "overall: PASSED" in capsys.readouterr().out
    assert (tmp_path / "merged-summary.txt").exists()
