from django import forms
from django.core.exceptions import ValidationError

from cells.models import ThetaMode
from correctors.models import CutoffConvention
from geometry.exceptions import GeometryError, TilingError
from geometry.models import CellGeometry, HoleShape
from geometry.services import reciprocal
from macro.models import MacroMode
from reactions.exceptions import ExpressionError
from reactions.nodes import VariableKind
from reactions.parser import parse


def _choices(enum):
    return [(member.value, member.value) for member in enum]


def parse_eps_list(text):
    """Comma list of 1/k or decimals; every value must be the reciprocal of an integer."""
    values = []
    for token in (t.strip() for t in str(text).split(",")):
        if not token:
            continue
        try:
            if "/" in token:
                numerator, denominator = token.split("/")
                value = float(numerator) / float(denominator)
            else:
                value = float(token)
            values.append(1.0 / reciprocal(value))
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"eps value {token!r} is not a number")
        except TilingError:
            raise ValidationError(f"eps value {token!r} is not 1/k for an integer k")
    if not values:
        raise ValidationError("at least one eps value is required")
    return tuple(values)


def format_eps_list(values):
    return ", ".join(f"1/{reciprocal(v)}" for v in values)


class GeometryForm(forms.Form):
    hole_shape = forms.ChoiceField(choices=_choices(HoleShape))
    hole_radius = forms.FloatField(min_value=0.0)
    eps = forms.CharField()
    h_ratio = forms.IntegerField(min_value=4)
    macro_cells = forms.IntegerField(min_value=4)
    eval_point = forms.CharField()

    def clean_eps(self):
        return parse_eps_list(self.cleaned_data["eps"])

    def clean_eval_point(self):
        try:
            point = tuple(float(v) for v in self.cleaned_data["eval_point"].split(","))
        except ValueError:
            raise ValidationError("eval_point must be 'x, y'")
        if len(point) != 2 or not all(0.0 <= v <= 1.0 for v in point):
            raise ValidationError("eval_point must be two coordinates in [0, 1]")
        return point

    def clean(self):
        cleaned_data = super().clean()
        shape = cleaned_data.get("hole_shape")
        radius = cleaned_data.get("hole_radius")
        if shape is not None and radius is not None:
            try:
                cleaned_data["geometry"] = CellGeometry(shape, radius)
            except GeometryError as exc:
                self.add_error("hole_radius", str(exc))
        return cleaned_data


class SpeciesForm(forms.Form):
    """One species; ``index`` is 1-based, ``count`` the number of species."""

    d = forms.CharField()
    a = forms.CharField()
    b = forms.CharField()
    R = forms.CharField()
    F = forms.CharField()
    alpha = forms.FloatField()

    def __init__(self, *args, index=1, count=1, **kwargs):
        super().__init__(*args, **kwargs)
        self.index = index
        self.count = count

    def _expression(self, name, arity, kind=VariableKind.SPECIES):
        text = self.cleaned_data[name].strip()
        try:
            expr = parse(text, arity, kind)
        except ExpressionError as exc:
            raise ValidationError(f"{name}{self.index} = {text!r}: {exc}")
        return text, expr

    def clean_d(self):
        return self._expression("d", 2, VariableKind.CELL)[0]

    def clean_a(self):
        return self._expression("a", 2, VariableKind.CELL)[0]

    def clean_b(self):
        return self._expression("b", 2, VariableKind.CELL)[0]

    def clean_R(self):
        return self._expression("R", self.count)[0]

    def clean_F(self):
        text, expr = self._expression("F", self.count)
        if expr.indices - {self.index}:
            raise ValidationError(f"F{self.index} = {text!r} may only depend on u{self.index}")
        return text

    def clean_alpha(self):
        alpha = self.cleaned_data["alpha"]
        if not alpha > 0:
            raise ValidationError(f"alpha{self.index} = {alpha} must be positive (ellipticity)")
        return alpha


class SolverForm(forms.Form):
    tol = forms.FloatField()
    max_iter = forms.IntegerField(min_value=1)
    omega = forms.FloatField()
    cutoff = forms.ChoiceField(choices=_choices(CutoffConvention))
    macro_mode = forms.ChoiceField(choices=_choices(MacroMode))
    order = forms.TypedChoiceField(choices=[(str(m), str(m)) for m in (0, 1, 2)], coerce=int)
    theta_mode = forms.ChoiceField(choices=_choices(ThetaMode))
    jobs = forms.IntegerField(min_value=1)

    def clean_tol(self):
        tol = self.cleaned_data["tol"]
        if not tol > 0:
            raise ValidationError("tol must be positive")
        return tol

    def clean_omega(self):
        omega = self.cleaned_data["omega"]
        if not 0.0 < omega <= 1.0:
            raise ValidationError("omega must lie in (0, 1]")
        return omega

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get("theta_mode") == ThetaMode.FROZEN.value and cleaned_data.get("order", 2) < 2:
            self.add_error("theta_mode", "frozen second cell functions only apply to order 2")
        return cleaned_data


class OutputForm(forms.Form):
    directory = forms.CharField()
    gnuplot = forms.BooleanField(required=False)
