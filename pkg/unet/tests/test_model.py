import numpy as np
import pytest
import torch

from poregrad_unet.model import UNet, UNetSpec, layer_count


class TestShapes:
    @pytest.mark.parametrize("depth", [1, 2, 3, 4])
    def test_output_shape_equals_input(self, depth):
        m = UNet(UNetSpec(depth=depth, base_channels=4))
        y = m(torch.zeros(2, 1, 64, 64))
        assert y.shape == (2, 1, 64, 64)

    def test_probabilities_in_unit_interval(self):
        m = UNet(UNetSpec(depth=2, base_channels=4))
        with torch.no_grad():
            y = m(torch.randn(1, 1, 32, 32) * 10)
        assert float(y.min()) >= 0.0
        assert float(y.max()) <= 1.0

    def test_default_layer_count_documented(self):
        # conv + batch-norm + transposed-conv layers; see the layer table in
        # the package README
        assert layer_count(UNet(UNetSpec())) == 41

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            UNet(UNetSpec(depth=0))


class TestGradients:
    def test_loss_head_gradient_matches_finite_differences(self):
        torch.manual_seed(0)
        m = UNet(UNetSpec(depth=1, base_channels=2)).double()
        m.eval()  # freeze batch-norm running stats so the loss is a fixed function
        x = torch.randn(1, 1, 4, 4, dtype=torch.float64)
        y = (torch.rand(1, 1, 4, 4) > 0.5).double()
        loss_fn = torch.nn.BCEWithLogitsLoss()

        def loss() -> torch.Tensor:
            return loss_fn(m.logits(x), y)

        loss().backward()
        rng = np.random.default_rng(1)
        h = 1e-6
        checked = 0
        for p in m.parameters():
            flat = p.detach().view(-1)
            gflat = p.grad.view(-1)
            for idx in rng.choice(flat.numel(), size=min(3, flat.numel()),
                                  replace=False):
                with torch.no_grad():
                    orig = flat[idx].item()
                    flat[idx] = orig + h
                    fp = loss().item()
                    flat[idx] = orig - h
                    fm = loss().item()
                    flat[idx] = orig
                num = (fp - fm) / (2 * h)
                ana = gflat[idx].item()
                assert abs(ana - num) <= 1e-3 * max(1.0, abs(num))
                checked += 1
        assert checked >= 10
