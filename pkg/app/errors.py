"""錯誤類別 - CLI 與 HTTP 介面依類別決定結束碼與狀態碼"""


class TwoWayLabError(Exception):
    """所有實驗室錯誤的基底類別"""

    exit_code = 3
    http_status = 400


class DomainError(TwoWayLabError, ValueError):
    """前置條件或參數範圍不成立"""


class NumericalError(TwoWayLabError, ArithmeticError):
    """數值上無法求解（病態互連、不穩定的名目模型等）"""


class NoResultError(TwoWayLabError):
    """搜尋沒有結果，例如格點上找不到穩定化增益"""

    exit_code = 4
    http_status = 404
