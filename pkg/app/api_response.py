import math
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from core.domain.assoc_model import TestResult


def json_float(value: Optional[float]) -> Optional[float]:
    """JSON has no NaN; missing values become null."""
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) or math.isinf(value) else value


def json_floats(values: Iterable) -> List:
    array = np.asarray(values, dtype=float)
    if array.ndim > 1:
        return [json_floats(row) for row in array]
    return [json_float(v) for v in array]


def result_payload(result: TestResult) -> Dict[str, Any]:
    return {
        "snp_index": result.snp_index,
        "method": result.method,
        "statistic": json_float(result.statistic),
        "df": result.df,
        "p_value": json_float(result.p_value),
        "exact_p_value": json_float(result.exact_p_value),
        "flag": result.flag,
    }


class ApiResponse:
    @staticmethod
    def success(data: Any = None, message: str = "Success") -> Dict[str, Any]:
        response = {
            "success": True,
            "message": message,
        }
        if data is not None:
            response["data"] = data
        return response

    @staticmethod
    def error(
        message: str = "An error occurred",
        details: Optional[Any] = None,
        error_code: Optional[str] = None,
    ) -> Dict[str, Any]:
        response = {
            "success": False,
            "message": message,
        }
        if details is not None:
            response["details"] = details
        if error_code is not None:
            response["error_code"] = error_code
        return response
